//! Sylvester transform `T F_o = A_o T + B_o H_o` for the observable block,
//! with the example gains and with the built-in defaults.
//!
//! `cargo run --example sylvester_design`

use interval_observer::decomp::{decompose, BasisStrategy};
use interval_observer::linalg::Matrix;
use interval_observer::sylvester::{build_design, default_gains};
use interval_observer::presets;

fn main() -> interval_observer::Result<()> {
    let sys = presets::paper_dt().scenario()?.system;
    let dec = decompose(&sys, 1e-9, BasisStrategy::Pivot)?;

    let a_o = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, 0.2, 0.3]));
    let b_o = Matrix::from_element(3, 1, 1.0);
    let d = build_design(&dec, &a_o, &b_o, &sys.w)?;
    print!("example gains\nT{}", d.t);
    println!("T[0,0] = {} (expected -10/11 = {})", d.t[(0, 0)], -10.0 / 11.0);
    println!("relative residual {:.2e}, rcond(T) {:.2e}\n", d.relative_residual(&dec), d.t_rcond);

    let (a_def, b_def) = default_gains(&dec.f_o, &dec.h_o, sys.domain, 0);
    let d = build_design(&dec, &a_def, &b_def, &sys.w)?;
    print!("default gains\nA_o{}T{}", a_def, d.t);
    println!("relative residual {:.2e}, rcond(T) {:.2e}", d.relative_residual(&dec), d.t_rcond);
    Ok(())
}
