//! Time-varying transforms that make a stable block cooperative.
//!
//! `cargo run --example jordan_transform`

use interval_observer::jordan::{build_transform, DEFAULT_COND_MAX};
use interval_observer::linalg::Matrix;
use interval_observer::TimeDomain;

fn main() -> interval_observer::Result<()> {
    // DT: F_no = -0.5 is Schur but negative, so P_t = (-1)^t and Lambda = 0.5.
    let f = Matrix::from_element(1, 1, -0.5);
    let jt = build_transform(&f, TimeDomain::Dt, DEFAULT_COND_MAX)?;
    println!("DT Lambda = {}, blocks {:?}", jt.lambda[(0, 0)], jt.blocks);
    for t in 0..4 {
        println!("  P_{t} = {}", jt.transform_at(t as f64).0[(0, 0)]);
    }

    // CT: a damped rotation. Lambda keeps the decay, P_t undoes the rotation.
    let f = Matrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
    let jt = build_transform(&f, TimeDomain::Ct, DEFAULT_COND_MAX)?;
    print!("CT Lambda{}", jt.lambda);
    println!("sigma = {:.3}", jt.sigma);
    for t in [0.0, 0.5, 1.0] {
        let (p, _) = jt.transform_at(t);
        let residual = &jt.lambda * &p - jt.derivative_at(t) - &p * &f;
        println!("  t = {t}: |Lambda P - dP/dt - P F| = {:.1e}", residual.amax());
    }

    // Already non-negative: no transform needed.
    let f = Matrix::from_row_slice(2, 2, &[0.2, 0.1, 0.0, 0.3]);
    let jt = build_transform(&f, TimeDomain::Dt, DEFAULT_COND_MAX)?;
    println!("non-negative block: blocks {:?}, P_7 = I: {}", jt.blocks, jt.transform_at(7.0).0 == Matrix::identity(2, 2));
    Ok(())
}
