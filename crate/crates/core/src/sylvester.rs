//! Constant-transform observer for the observable block.
//!
//! `T` solves `T F_o = A_o T + B_o H_o`; in `T`-coordinates the estimation
//! error evolves under the cooperative, stable `A_o`, so interval bounds
//! propagate directly. Everything the online observer needs is precomputed
//! here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomp::ObservabilityDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{self, neg_part, pos_part, Matrix, Vector};
use crate::model::TimeDomain;

/// Minimum reciprocal condition of `T`.
pub const T_RCOND_MIN: f64 = 1e-9;

/// Attempts allowed when `B_o` is drawn from a seed.
pub const MAX_GAIN_ATTEMPTS: usize = 10;

const COLLISION_TOL: f64 = 1e-9;
const COLLISION_NUDGE: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone)]
pub struct SylvesterDesign {
    pub a_o: Matrix,
    pub b_o: Matrix,
    pub t: Matrix,
    pub t_inv: Matrix,
    /// `T⁻¹ B_o`
    pub gain: Matrix,
    /// `F_o - T⁻¹ B_o H_o`
    pub error_dynamics: Matrix,
    /// `T⁻¹ (T D_o)⁺` and `T⁻¹ (T D_o)⁻`
    pub dist_plus: Matrix,
    pub dist_minus: Matrix,
    /// `T⁻¹ (B_o W)⁺` and `T⁻¹ (B_o W)⁻`
    pub noise_plus: Matrix,
    pub noise_minus: Matrix,
    /// `T⁻¹ (T N_o)⁺` and `T⁻¹ (T N_o)⁻`
    pub init_plus: Matrix,
    pub init_minus: Matrix,
    /// `(T⁻¹)⁺ T` and `(T⁻¹)⁻ T`
    pub bound_plus: Matrix,
    pub bound_minus: Matrix,
    pub sylvester_residual: f64,
    pub t_rcond: f64,
}

/// Deterministic stable cooperative `A_o` and matching `B_o`.
///
/// `A_o` is diagonal: `0.9·k/(n_o+1)` in DT, `-k` in CT, each entry nudged
/// upward while it sits on an eigenvalue of `F_o`. `B_o` is all ones for a
/// single output, otherwise uniform in `[-1, 1]` drawn from `seed`.
pub fn default_gains(f_o: &Matrix, h_o: &Matrix, domain: TimeDomain, seed: u64) -> (Matrix, Matrix) {
    let n_o = f_o.nrows();
    let n_y = h_o.nrows();
    let eigs = linalg::spectrum(f_o)
        .map(|s| s.eigenvalues)
        .unwrap_or_default();
    let diag: Vec<f64> = (1..=n_o)
        .map(|k| {
            let mut a = match domain {
                TimeDomain::Dt => k as f64 / (n_o + 1) as f64 * 0.9,
                TimeDomain::Ct => -(k as f64),
            };
            while eigs.iter().any(|z| (z - a).norm() <= COLLISION_TOL) {
                a += COLLISION_NUDGE;
            }
            a
        })
        .collect();
    let a_o = Matrix::from_diagonal(&Vector::from_vec(diag));
    let b_o = if n_y == 1 {
        Matrix::from_element(n_o, 1, 1.0)
    } else {
        seeded_gain(n_o, n_y, seed)
    };
    (a_o, b_o)
}

fn seeded_gain(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
}

fn check_gains(dec: &ObservabilityDecomposition, a_o: &Matrix, b_o: &Matrix) -> Result<()> {
    let n_o = dec.n_o;
    let n_y = dec.h_o.nrows();
    if a_o.shape() != (n_o, n_o) {
        return Err(Error::InvalidGains(format!(
            "A_o must be {n_o}x{n_o}, got {}x{}",
            a_o.nrows(),
            a_o.ncols()
        )));
    }
    if b_o.shape() != (n_o, n_y) {
        return Err(Error::InvalidGains(format!(
            "B_o must be {n_o}x{n_y}, got {}x{}",
            b_o.nrows(),
            b_o.ncols()
        )));
    }
    let (structure, stability) = match dec.domain {
        TimeDomain::Ct => ("Metzler", "Hurwitz"),
        TimeDomain::Dt => ("non-negative", "Schur"),
    };
    if !dec.domain.is_cooperative(a_o) {
        return Err(Error::InvalidGains(format!("A_o is not {structure}")));
    }
    if !dec.domain.is_stable(a_o, 0.0) {
        return Err(Error::InvalidGains(format!("A_o is not {stability}")));
    }
    Ok(())
}

/// Solves for `T` with the given gains and certifies it.
pub fn build_design(
    dec: &ObservabilityDecomposition,
    a_o: &Matrix,
    b_o: &Matrix,
    w: &Matrix,
) -> Result<SylvesterDesign> {
    check_gains(dec, a_o, b_o)?;
    let t = linalg::solve_sylvester(&(-a_o), &dec.f_o, &(b_o * &dec.h_o))?;
    from_transform(dec, a_o, b_o, w, t)
}

/// Builds a design from an explicit `T`, only checking that it can be inverted.
///
/// The Sylvester residual is recorded, not enforced, so a deliberately wrong
/// `T` can be used to exercise the containment checks.
pub fn from_transform(
    dec: &ObservabilityDecomposition,
    a_o: &Matrix,
    b_o: &Matrix,
    w: &Matrix,
    t: Matrix,
) -> Result<SylvesterDesign> {
    let t_rcond = linalg::rcond(&t);
    let t_inv = linalg::invert(&t, T_RCOND_MIN).map_err(|_| Error::NearSingularT {
        attempts: 1,
        rcond: t_rcond,
    })?;
    let bh = b_o * &dec.h_o;
    let sylvester_residual = (&t * &dec.f_o - a_o * &t - &bh).norm();
    let td = &t * &dec.d_o;
    let bw = b_o * w;
    let tn = &t * &dec.proj_o;
    let gain = &t_inv * b_o;
    Ok(SylvesterDesign {
        error_dynamics: &dec.f_o - &gain * &dec.h_o,
        dist_plus: &t_inv * pos_part(&td),
        dist_minus: &t_inv * neg_part(&td),
        noise_plus: &t_inv * pos_part(&bw),
        noise_minus: &t_inv * neg_part(&bw),
        init_plus: &t_inv * pos_part(&tn),
        init_minus: &t_inv * neg_part(&tn),
        bound_plus: pos_part(&t_inv) * &t,
        bound_minus: neg_part(&t_inv) * &t,
        gain,
        a_o: a_o.clone(),
        b_o: b_o.clone(),
        t,
        t_inv,
        sylvester_residual,
        t_rcond,
    })
}

/// Full gain selection: user overrides win, defaults otherwise, with reseeded
/// retries when `B_o` is generated and `T` comes out near-singular.
pub fn design_observable_part(
    dec: &ObservabilityDecomposition,
    w: &Matrix,
    a_o_override: Option<&Matrix>,
    b_o_override: Option<&Matrix>,
    seed: u64,
) -> Result<SylvesterDesign> {
    let retry = b_o_override.is_none() && dec.h_o.nrows() > 1;
    let attempts = if retry { MAX_GAIN_ATTEMPTS } else { 1 };
    let mut last_rcond = 0.0;
    for k in 0..attempts {
        let (a_def, b_def) = default_gains(&dec.f_o, &dec.h_o, dec.domain, seed.wrapping_add(k as u64));
        let a_o = a_o_override.unwrap_or(&a_def);
        let b_o = b_o_override.unwrap_or(&b_def);
        match build_design(dec, a_o, b_o, w) {
            Err(Error::NearSingularT { rcond, .. }) => last_rcond = rcond,
            other => return other,
        }
    }
    Err(Error::NearSingularT {
        attempts,
        rcond: last_rcond,
    })
}

impl SylvesterDesign {
    /// Relative Sylvester residual `‖T F_o − A_o T − B_o H_o‖ / (1 + ‖B_o H_o‖)`.
    pub fn relative_residual(&self, dec: &ObservabilityDecomposition) -> f64 {
        self.sylvester_residual / (1.0 + (&self.b_o * &dec.h_o).norm())
    }

    /// Initial internal state of the observable-part observer.
    pub fn initial_state(&self, x0_upper: &Vector, x0_lower: &Vector) -> Result<(Vector, Vector)> {
        check_box(x0_lower, x0_upper)?;
        Ok((
            &self.init_plus * x0_upper - &self.init_minus * x0_lower,
            &self.init_plus * x0_lower - &self.init_minus * x0_upper,
        ))
    }
}

/// Bounds on `z_o` at time zero, straight from the initial box.
pub fn zo_initial_bounds(
    dec: &ObservabilityDecomposition,
    x0_upper: &Vector,
    x0_lower: &Vector,
) -> Result<(Vector, Vector)> {
    check_box(x0_lower, x0_upper)?;
    let (lo, hi) = linalg::interval_image(&dec.proj_o, x0_lower, x0_upper)?;
    Ok((hi, lo))
}

pub fn zo_initial_state(
    design: &SylvesterDesign,
    x0_upper: &Vector,
    x0_lower: &Vector,
) -> Result<(Vector, Vector)> {
    design.initial_state(x0_upper, x0_lower)
}

fn check_box(low: &Vector, high: &Vector) -> Result<()> {
    if low.len() != high.len() {
        return Err(Error::DimensionMismatch("initial box bounds differ in length".into()));
    }
    if !crate::model::ordered(low, high) {
        return Err(Error::UnorderedBounds("x0_lower exceeds x0_upper".into()));
    }
    Ok(())
}
