//! Observability decomposition of the 4-state discrete-time example.
//!
//! `cargo run --example decomposition`

use interval_observer::decomp::{decompose, verify_decomposition, BasisStrategy};
use interval_observer::presets;

fn main() -> interval_observer::Result<()> {
    let sys = presets::paper_dt().scenario()?.system;
    for strategy in [BasisStrategy::Pivot, BasisStrategy::Orthonormal] {
        let dec = decompose(&sys, 1e-9, strategy)?;
        println!("== {strategy:?} basis: n_o = {}, n_no = {}", dec.n_o, dec.n_no);
        print!("M_o{}M_no{}", dec.basis_o, dec.basis_no);
        print!("F_o{}H_o{}F_noo{}F_no{}", dec.f_o, dec.h_o, dec.f_noo, dec.f_no);
        let cert = verify_decomposition(&dec, &sys.f, &sys.h, 1e-10);
        println!("certificates pass: {}\n", cert.passed());
    }
    Ok(())
}
