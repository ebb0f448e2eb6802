//! The online part: the observable-block observer, the time-varying observer
//! for the detectable block, recombination into `x`-bounds, and the single
//! stacked observer written directly in the original coordinates.
//!
//! In DT every `step_*` returns the next internal state; in CT the very same
//! expression is the time derivative and the simulation harness integrates it.

use crate::decomp::ObservabilityDecomposition;
use crate::jordan::JordanTransform;
use crate::linalg::{self, neg_part, pos_part, split_image, Matrix, Vector};
use crate::model::EnvelopeSample;
use crate::sylvester::SylvesterDesign;

/// A vector box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub upper: Vector,
    pub lower: Vector,
}

impl Bounds {
    pub fn new(upper: Vector, lower: Vector) -> Self {
        Bounds { upper, lower }
    }

    pub fn width(&self) -> Vector {
        &self.upper - &self.lower
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.slack(x) <= tol
    }

    /// Largest amount by which `x` leaves the box (≤ 0 when inside).
    pub fn slack(&self, x: &Vector) -> f64 {
        (0..x.len())
            .map(|i| (self.lower[i] - x[i]).max(x[i] - self.upper[i]))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Internal states of the cascade (observable-block + detectable-block) observer.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub zo_upper: Vector,
    pub zo_lower: Vector,
    pub zno_upper: Vector,
    pub zno_lower: Vector,
}

impl ObserverState {
    pub fn pack(&self) -> Vector {
        stack(&[&self.zo_upper, &self.zo_lower, &self.zno_upper, &self.zno_lower])
    }

    pub fn unpack(v: &Vector, n_o: usize, n_no: usize) -> Self {
        ObserverState {
            zo_upper: v.rows(0, n_o).into_owned(),
            zo_lower: v.rows(n_o, n_o).into_owned(),
            zno_upper: v.rows(2 * n_o, n_no).into_owned(),
            zno_lower: v.rows(2 * n_o + n_no, n_no).into_owned(),
        }
    }
}

/// Stacked internal state `(ẑ_o, ẑ_no)` of the direct observer.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectObserverState {
    pub upper: Vector,
    pub lower: Vector,
}

impl DirectObserverState {
    pub fn pack(&self) -> Vector {
        stack(&[&self.upper, &self.lower])
    }

    pub fn unpack(v: &Vector, n: usize) -> Self {
        DirectObserverState {
            upper: v.rows(0, n).into_owned(),
            lower: v.rows(n, n).into_owned(),
        }
    }
}

pub(crate) fn stack(parts: &[&Vector]) -> Vector {
    let len = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(len);
    let mut k = 0;
    for p in parts {
        out.rows_mut(k, p.len()).copy_from(*p);
        k += p.len();
    }
    out
}

/// Observable-block observer update (next state in DT, derivative in CT).
#[allow(clippy::too_many_arguments)]
pub fn step_zo(
    design: &SylvesterDesign,
    dec: &ObservabilityDecomposition,
    upper: &Vector,
    lower: &Vector,
    y: &Vector,
    u: &Vector,
    env: &EnvelopeSample,
) -> (Vector, Vector) {
    let common = &dec.proj_o * u + &design.gain * y;
    let next_upper = &design.error_dynamics * upper
        + &common
        + &design.dist_plus * &env.d_upper
        - &design.dist_minus * &env.d_lower
        + &design.noise_minus * &env.w_upper
        - &design.noise_plus * &env.w_lower;
    let next_lower = &design.error_dynamics * lower
        + &common
        + &design.dist_plus * &env.d_lower
        - &design.dist_minus * &env.d_upper
        + &design.noise_minus * &env.w_lower
        - &design.noise_plus * &env.w_upper;
    (next_upper, next_lower)
}

/// `z_o` bounds recovered from the internal state through `T`.
pub fn zo_bounds(design: &SylvesterDesign, upper: &Vector, lower: &Vector) -> Bounds {
    Bounds::new(
        &design.bound_plus * upper - &design.bound_minus * lower,
        &design.bound_plus * lower - &design.bound_minus * upper,
    )
}

/// Detectable-block observer update at time `t`, fed with `z_o` bounds.
#[allow(clippy::too_many_arguments)]
pub fn step_zno(
    jt: &JordanTransform,
    dec: &ObservabilityDecomposition,
    upper: &Vector,
    lower: &Vector,
    zo: &Bounds,
    u: &Vector,
    env: &EnvelopeSample,
    t: f64,
) -> (Vector, Vector) {
    let sigma = jt.sigma_factor(t);
    let known = &sigma * &dec.proj_no * u;
    let (zo_lo, zo_hi) = split_image(&(&sigma * &dec.f_noo), &zo.lower, &zo.upper);
    let (d_lo, d_hi) = split_image(&(&sigma * &dec.d_no), &env.d_lower, &env.d_upper);
    (
        &jt.lambda * upper + &known + zo_hi + d_hi,
        &jt.lambda * lower + &known + zo_lo + d_lo,
    )
}

/// `z_no` bounds recovered through `P_t⁻¹`.
pub fn zno_bounds(jt: &JordanTransform, upper: &Vector, lower: &Vector, t: f64) -> Bounds {
    let (_, p_inv) = jt.transform_at(t);
    let (lo, hi) = split_image(&p_inv, lower, upper);
    Bounds::new(hi, lo)
}

/// Initial internal state of the detectable-block observer.
pub fn zno_initial_state(
    jt: &JordanTransform,
    dec: &ObservabilityDecomposition,
    x0_upper: &Vector,
    x0_lower: &Vector,
) -> (Vector, Vector) {
    let (p0, _) = jt.transform_at(0.0);
    let (lo, hi) = split_image(&(p0 * &dec.proj_no), x0_lower, x0_upper);
    (hi, lo)
}

/// `z_no` bounds at time zero, straight from the initial box.
pub fn zno_initial_bounds(
    dec: &ObservabilityDecomposition,
    x0_upper: &Vector,
    x0_lower: &Vector,
) -> Bounds {
    let (lo, hi) = split_image(&dec.proj_no, x0_lower, x0_upper);
    Bounds::new(hi, lo)
}

/// `x = M_o z_o + M_no z_no` pushed through interval arithmetic.
pub fn recombine(dec: &ObservabilityDecomposition, zo: &Bounds, zno: &Bounds) -> Bounds {
    let (o_lo, o_hi) = split_image(&dec.basis_o, &zo.lower, &zo.upper);
    let (n_lo, n_hi) = split_image(&dec.basis_no, &zno.lower, &zno.upper);
    Bounds::new(o_hi + n_hi, o_lo + n_lo)
}

/// Cascade observer with all design objects attached.
#[derive(Debug, Clone, Copy)]
pub struct CascadeObserver<'a> {
    pub dec: &'a ObservabilityDecomposition,
    pub design: &'a SylvesterDesign,
    pub jt: &'a JordanTransform,
}

impl<'a> CascadeObserver<'a> {
    pub fn initial_state(&self, x0_upper: &Vector, x0_lower: &Vector) -> ObserverState {
        let zo_upper = &self.design.init_plus * x0_upper - &self.design.init_minus * x0_lower;
        let zo_lower = &self.design.init_plus * x0_lower - &self.design.init_minus * x0_upper;
        let (zno_upper, zno_lower) = zno_initial_state(self.jt, self.dec, x0_upper, x0_lower);
        ObserverState {
            zo_upper,
            zo_lower,
            zno_upper,
            zno_lower,
        }
    }

    /// Next state (DT) or time derivative (CT).
    ///
    /// The `z_o` bounds driving the detectable block always come from the
    /// internal state, at `t = 0` too, which keeps this recursion identical to
    /// the direct observer.
    pub fn step(
        &self,
        s: &ObserverState,
        t: f64,
        y: &Vector,
        u: &Vector,
        env: &EnvelopeSample,
    ) -> ObserverState {
        let (zo_upper, zo_lower) = step_zo(self.design, self.dec, &s.zo_upper, &s.zo_lower, y, u, env);
        let zo = zo_bounds(self.design, &s.zo_upper, &s.zo_lower);
        let (zno_upper, zno_lower) =
            step_zno(self.jt, self.dec, &s.zno_upper, &s.zno_lower, &zo, u, env, t);
        ObserverState {
            zo_upper,
            zo_lower,
            zno_upper,
            zno_lower,
        }
    }

    /// `(z_o, z_no)` bounds after time zero.
    pub fn z_bounds(&self, s: &ObserverState, t: f64) -> (Bounds, Bounds) {
        (
            zo_bounds(self.design, &s.zo_upper, &s.zo_lower),
            zno_bounds(self.jt, &s.zno_upper, &s.zno_lower, t),
        )
    }

    /// `z` bounds at time zero from the initial box.
    pub fn initial_z_bounds(&self, x0_upper: &Vector, x0_lower: &Vector) -> (Bounds, Bounds) {
        let (lo, hi) = split_image(&self.dec.proj_o, x0_lower, x0_upper);
        (Bounds::new(hi, lo), zno_initial_bounds(self.dec, x0_upper, x0_lower))
    }

    pub fn x_bounds(&self, s: &ObserverState, t: f64) -> Bounds {
        let (zo, zno) = self.z_bounds(s, t);
        recombine(self.dec, &zo, &zno)
    }
}

/// Observer written in the original coordinates: every constant matrix is
/// precomputed, the `t`-dependent ones are generated from `P_t`.
#[derive(Debug, Clone)]
pub struct DirectObserver {
    pub n_o: usize,
    pub n_no: usize,
    /// `F_o − T⁻¹ B_o H_o`
    pub top_left: Matrix,
    pub lambda: Matrix,
    pub dist_plus_o: Matrix,
    pub dist_minus_o: Matrix,
    pub noise_plus_o: Matrix,
    pub noise_minus_o: Matrix,
    pub input_o: Matrix,
    pub output_gain: Matrix,
    pub init_plus_o: Matrix,
    pub init_minus_o: Matrix,
    /// `φ_l = M_o⁺ (T⁻¹)⁺ T + M_o⁻ (T⁻¹)⁻ T`
    pub phi_l: Matrix,
    /// `φ_r = M_o⁺ (T⁻¹)⁻ T + M_o⁻ (T⁻¹)⁺ T`
    pub phi_r: Matrix,
    bound_plus: Matrix,
    bound_minus: Matrix,
    f_noo: Matrix,
    d_no: Matrix,
    proj_no: Matrix,
    basis_no_plus: Matrix,
    basis_no_minus: Matrix,
    jt: JordanTransform,
}

/// Time-varying blocks of the direct observer at one instant.
#[derive(Debug, Clone)]
pub struct DirectBlocks {
    pub phi: Matrix,
    pub omega: Matrix,
    pub dist_plus_no: Matrix,
    pub dist_minus_no: Matrix,
    pub input_no: Matrix,
}

pub fn assemble_direct(
    dec: &ObservabilityDecomposition,
    design: &SylvesterDesign,
    jt: &JordanTransform,
) -> DirectObserver {
    let (mo_p, mo_m) = (pos_part(&dec.basis_o), neg_part(&dec.basis_o));
    DirectObserver {
        n_o: dec.n_o,
        n_no: dec.n_no,
        top_left: design.error_dynamics.clone(),
        lambda: jt.lambda.clone(),
        dist_plus_o: design.dist_plus.clone(),
        dist_minus_o: design.dist_minus.clone(),
        noise_plus_o: design.noise_plus.clone(),
        noise_minus_o: design.noise_minus.clone(),
        input_o: dec.proj_o.clone(),
        output_gain: design.gain.clone(),
        init_plus_o: design.init_plus.clone(),
        init_minus_o: design.init_minus.clone(),
        phi_l: &mo_p * &design.bound_plus + &mo_m * &design.bound_minus,
        phi_r: &mo_p * &design.bound_minus + &mo_m * &design.bound_plus,
        bound_plus: design.bound_plus.clone(),
        bound_minus: design.bound_minus.clone(),
        f_noo: dec.f_noo.clone(),
        d_no: dec.d_no.clone(),
        proj_no: dec.proj_no.clone(),
        basis_no_plus: pos_part(&dec.basis_no),
        basis_no_minus: neg_part(&dec.basis_no),
        jt: jt.clone(),
    }
}

impl DirectObserver {
    pub fn dim(&self) -> usize {
        self.n_o + self.n_no
    }

    /// `Φ_t`, `Ω_t` and the other `Σ_t`-dependent blocks.
    pub fn blocks_at(&self, t: f64) -> DirectBlocks {
        let sigma = self.jt.sigma_factor(t);
        let sf = &sigma * &self.f_noo;
        let (sf_p, sf_m) = (pos_part(&sf), neg_part(&sf));
        let sd = &sigma * &self.d_no;
        DirectBlocks {
            phi: &sf_p * &self.bound_plus + &sf_m * &self.bound_minus,
            omega: -(&sf_p * &self.bound_minus) - &sf_m * &self.bound_plus,
            dist_plus_no: pos_part(&sd),
            dist_minus_no: neg_part(&sd),
            input_no: &sigma * &self.proj_no,
        }
    }

    /// `(ϕ_l,t, ϕ_r,t)` from `P_t⁻¹`.
    pub fn output_blocks_at(&self, t: f64) -> (Matrix, Matrix) {
        let (_, p_inv) = self.jt.transform_at(t);
        let (pp, pm) = (pos_part(&p_inv), neg_part(&p_inv));
        (
            &self.basis_no_plus * &pp + &self.basis_no_minus * &pm,
            &self.basis_no_plus * &pm + &self.basis_no_minus * &pp,
        )
    }

    pub fn initial_state(&self, x0_upper: &Vector, x0_lower: &Vector) -> DirectObserverState {
        let (p0, _) = self.jt.transform_at(0.0);
        let pn = p0 * &self.proj_no;
        let (pn_p, pn_m) = (pos_part(&pn), neg_part(&pn));
        let upper = stack(&[
            &(&self.init_plus_o * x0_upper - &self.init_minus_o * x0_lower),
            &(&pn_p * x0_upper - &pn_m * x0_lower),
        ]);
        let lower = stack(&[
            &(&self.init_plus_o * x0_lower - &self.init_minus_o * x0_upper),
            &(&pn_p * x0_lower - &pn_m * x0_upper),
        ]);
        DirectObserverState { upper, lower }
    }

    /// Next state (DT) or time derivative (CT).
    pub fn step(
        &self,
        s: &DirectObserverState,
        t: f64,
        y: &Vector,
        u: &Vector,
        env: &EnvelopeSample,
    ) -> DirectObserverState {
        let b = self.blocks_at(t);
        let (n_o, n_no) = (self.n_o, self.n_no);
        let one = |own: &Vector, other: &Vector, d_hi: &Vector, d_lo: &Vector, w_hi: &Vector, w_lo: &Vector| {
            let own_o = own.rows(0, n_o);
            let own_no = own.rows(n_o, n_no);
            let other_o = other.rows(0, n_o);
            let top = &self.top_left * own_o
                + &self.dist_plus_o * d_hi
                - &self.dist_minus_o * d_lo
                + &self.noise_minus_o * w_hi
                - &self.noise_plus_o * w_lo
                + &self.input_o * u
                + &self.output_gain * y;
            let bottom = &b.phi * own_o
                + &self.lambda * own_no
                + &b.omega * other_o
                + &b.dist_plus_no * d_hi
                - &b.dist_minus_no * d_lo
                + &b.input_no * u;
            stack(&[&top, &bottom])
        };
        DirectObserverState {
            upper: one(&s.upper, &s.lower, &env.d_upper, &env.d_lower, &env.w_upper, &env.w_lower),
            lower: one(&s.lower, &s.upper, &env.d_lower, &env.d_upper, &env.w_lower, &env.w_upper),
        }
    }

    /// `x` bounds after time zero.
    pub fn bounds(&self, s: &DirectObserverState, t: f64) -> Bounds {
        let (var_l, var_r) = self.output_blocks_at(t);
        let left = linalg::hstack(&[&self.phi_l, &var_l]);
        let right = linalg::hstack(&[&self.phi_r, &var_r]);
        Bounds::new(&left * &s.upper - &right * &s.lower, &left * &s.lower - &right * &s.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{DesignBundle, DesignOptions};
    use crate::presets;

    fn dt_bundle() -> DesignBundle {
        let cfg = presets::paper_dt();
        DesignBundle::build(&cfg.scenario().unwrap().system, &cfg.design_options().unwrap()).unwrap()
    }

    fn zero_env() -> EnvelopeSample {
        EnvelopeSample {
            d_upper: Vector::zeros(1),
            d_lower: Vector::zeros(1),
            w_upper: Vector::zeros(1),
            w_lower: Vector::zeros(1),
        }
    }

    #[test]
    fn collapsed_box_stays_collapsed() {
        let b = dt_bundle();
        let obs = b.cascade();
        let x = Vector::from_vec(vec![0.3, -0.4, 0.2, 0.1]);
        let s = obs.initial_state(&x, &x);
        let y = &b_h() * &x;
        let u = Vector::from_vec(vec![0.1, 0.0, -0.2, 0.0]);
        let next = obs.step(&s, 0.0, &y, &u, &zero_env());
        assert!((&next.zo_upper - &next.zo_lower).amax() < 1e-12);
        assert!((&next.zno_upper - &next.zno_lower).amax() < 1e-12);
        let f = presets::paper_dt().scenario().unwrap().system.f;
        let x1 = &f * &x + &u;
        let xb = obs.x_bounds(&next, 1.0);
        assert!((&xb.upper - &xb.lower).amax() < 1e-12);
        assert!((&xb.upper - &x1).amax() < 1e-12);
    }

    fn b_h() -> Matrix {
        Matrix::from_row_slice(1, 4, &[1.0, 0.0, 1.0, 1.0])
    }

    #[test]
    fn disturbance_gap_scales_linearly() {
        let b = dt_bundle();
        let (dec, design) = (&b.dec, &b.design);
        let upper = Vector::from_vec(vec![0.5, 0.2, -0.1]);
        let lower = Vector::from_vec(vec![-0.5, -0.3, -0.4]);
        let y = Vector::from_element(1, 0.3);
        let u = Vector::zeros(4);
        let env = |gap: f64| EnvelopeSample {
            d_upper: Vector::from_element(1, gap),
            d_lower: Vector::from_element(1, -gap),
            w_upper: Vector::zeros(1),
            w_lower: Vector::zeros(1),
        };
        let width = |gap| {
            let (u1, l1) = step_zo(design, dec, &upper, &lower, &y, &u, &env(gap));
            &design.t * (u1 - l1)
        };
        let base = width(0.0);
        let inc1 = width(0.02) - &base;
        let inc2 = width(0.04) - &base;
        assert!((inc2 - inc1 * 2.0).amax() < 1e-14);
    }

    #[test]
    fn zo_bounds_enclose_t_box_vertices() {
        let b = dt_bundle();
        let design = &b.design;
        let upper = Vector::from_vec(vec![0.4, 0.1, 0.3]);
        let lower = Vector::from_vec(vec![-0.2, -0.6, 0.1]);
        // Order the box in T-coordinates, as the observer guarantees.
        let (a, c) = (&design.t * &upper, &design.t * &lower);
        let (hi, lo) = (a.sup(&c), a.inf(&c));
        let zu = &design.t_inv * &hi;
        let zl = &design.t_inv * &lo;
        let bnd = zo_bounds(design, &zu, &zl);
        for mask in 0..8u32 {
            let v = Vector::from_fn(3, |i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] });
            let z = &design.t_inv * v;
            assert!(bnd.contains(&z, 1e-12));
        }
    }

    #[test]
    fn zno_bounds_alternate_sign() {
        let b = dt_bundle();
        let up = Vector::from_element(1, 0.7);
        let lo = Vector::from_element(1, -0.2);
        let even = zno_bounds(&b.jt, &up, &lo, 4.0);
        assert_eq!((even.upper[0], even.lower[0]), (0.7, -0.2));
        let odd = zno_bounds(&b.jt, &up, &lo, 5.0);
        assert_eq!((odd.upper[0], odd.lower[0]), (0.2, -0.7));
    }

    #[test]
    fn zno_width_recursion() {
        let b = dt_bundle();
        let up = Vector::from_element(1, 0.7);
        let lo = Vector::from_element(1, -0.2);
        let zo = Bounds::new(Vector::from_vec(vec![1.0, 0.5, 0.2]), Vector::from_vec(vec![0.0, -0.5, 0.1]));
        let env = EnvelopeSample {
            d_upper: Vector::from_element(1, 0.02),
            d_lower: Vector::from_element(1, -0.02),
            ..zero_env()
        };
        for t in 0..4 {
            let t = t as f64;
            let (nu, nl) = step_zno(&b.jt, &b.dec, &up, &lo, &zo, &Vector::zeros(4), &env, t);
            let sigma = b.jt.sigma_factor(t);
            let want = &b.jt.lambda * (&up - &lo)
                + (&sigma * &b.dec.f_noo).abs() * zo.width()
                + (&sigma * &b.dec.d_no).abs() * Vector::from_element(1, 0.04);
            assert!(((nu - nl) - want).amax() < 1e-14);
        }
    }

    #[test]
    fn recombine_reinterleaves_for_selection_basis() {
        let b = dt_bundle();
        let zo = Bounds::new(Vector::from_vec(vec![1.0, 2.0, 3.0]), Vector::from_vec(vec![0.0, 1.0, 2.0]));
        let zno = Bounds::new(Vector::from_element(1, 9.0), Vector::from_element(1, 8.0));
        let x = recombine(&b.dec, &zo, &zno);
        assert_eq!(x.upper.as_slice(), &[1.0, 9.0, 2.0, 3.0]);
        assert_eq!(x.lower.as_slice(), &[0.0, 8.0, 1.0, 2.0]);
    }

    #[test]
    fn direct_constant_blocks() {
        let b = dt_bundle();
        let direct = b.direct();
        assert_eq!(direct.lambda, Matrix::from_element(1, 1, 0.5));
        assert_eq!(direct.top_left, &b.dec.f_o - &b.design.gain * &b.dec.h_o);
        let s = DirectObserverState {
            upper: Vector::zeros(4),
            lower: Vector::zeros(4),
        };
        let next = direct.step(&s, 3.0, &Vector::zeros(1), &Vector::zeros(4), &zero_env());
        assert_eq!(next.upper.amax(), 0.0);
        assert_eq!(next.lower.amax(), 0.0);
    }

    #[test]
    fn fully_observable_direct_degenerates() {
        use crate::linalg::from_rows;
        use crate::model::{LtiSystem, TimeDomain};
        let sys = LtiSystem::new(
            TimeDomain::Dt,
            from_rows(&[vec![0.0, 1.0], vec![-0.5, 0.3]]).unwrap(),
            Matrix::zeros(2, 1),
            from_rows(&[vec![1.0, 0.0]]).unwrap(),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let b = DesignBundle::build(&sys, &DesignOptions::default()).unwrap();
        assert_eq!(b.dec.n_no, 0);
        let direct = b.direct();
        let cascade = b.cascade();
        let hi = Vector::from_vec(vec![1.0, 0.5]);
        let lo = Vector::from_vec(vec![-1.0, 0.0]);
        let mut s = direct.initial_state(&hi, &lo);
        let mut c = cascade.initial_state(&hi, &lo);
        let y = Vector::from_element(1, 0.2);
        let env = zero_env();
        for t in 0..20 {
            s = direct.step(&s, t as f64, &y, &Vector::zeros(2), &env);
            c = cascade.step(&c, t as f64, &y, &Vector::zeros(2), &env);
            let (a, bb) = (direct.bounds(&s, t as f64 + 1.0), cascade.x_bounds(&c, t as f64 + 1.0));
            assert!((&a.upper - &bb.upper).amax() < 1e-12);
            assert!((&a.lower - &bb.lower).amax() < 1e-12);
        }
    }
}
