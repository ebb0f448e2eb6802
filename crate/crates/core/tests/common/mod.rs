//! Oracles and acceptance checks shared by the `acceptance` runner and the
//! regular test suites. Every oracle here is computed independently of the
//! library code path it checks.

#![allow(dead_code)]

use interval_observer::jordan::build_transform;
use interval_observer::linalg::{interval_image, solve_sylvester_schur, Matrix, Vector};
use interval_observer::model::TimeDomain;
use interval_observer::sim::{self, Horizon, ObserverForm, SimulationConfig};
use interval_observer::{presets, DesignBundle, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn max_dev(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).amax()
}

pub fn bundle(cfg: &ScenarioConfig) -> DesignBundle {
    let s = cfg.scenario().expect("preset scenario");
    DesignBundle::build(&s.system, &cfg.design_options().unwrap()).expect("preset design")
}

fn steps(n: usize) -> SimulationConfig {
    SimulationConfig {
        horizon: Horizon::Steps(n),
        ..Default::default()
    }
}

/// Real block-diagonal matrix with well separated eigenvalues, similar to a
/// random well-conditioned matrix. `stable_dt` selects the unit disc (else the
/// open left half-plane).
pub fn random_semisimple(n: usize, stable_dt: bool, rng: &mut ChaCha8Rng) -> Matrix {
    let mut used: Vec<(f64, f64)> = Vec::new();
    let mut fresh = |rng: &mut ChaCha8Rng, complex: bool| loop {
        let (re, im) = if stable_dt {
            let r = rng.random_range(0.05..0.95);
            if complex {
                let th = rng.random_range(0.2..3.0);
                (r * f64::cos(th), r * f64::sin(th))
            } else {
                (if rng.random_bool(0.5) { r } else { -r }, 0.0)
            }
        } else {
            let re = rng.random_range(-3.0..-0.1);
            (re, if complex { rng.random_range(0.2..3.0) } else { 0.0 })
        };
        if used
            .iter()
            .all(|&(a, b)| ((a - re).powi(2) + (b - im).powi(2)).sqrt() > 0.05 && ((a - re).powi(2) + (b + im).powi(2)).sqrt() > 0.05)
        {
            used.push((re, im));
            return (re, im);
        }
    };
    let mut j = Matrix::zeros(n, n);
    let mut k = 0;
    while k < n {
        if k + 1 < n && rng.random_bool(0.5) {
            let (a, b) = fresh(rng, true);
            j[(k, k)] = a;
            j[(k + 1, k + 1)] = a;
            j[(k, k + 1)] = -b;
            j[(k + 1, k)] = b;
            k += 2;
        } else {
            j[(k, k)] = fresh(rng, false).0;
            k += 1;
        }
    }
    loop {
        let s = Matrix::identity(n, n) + random_matrix(n, n, rng) * 0.4;
        let sv = s.clone().svd(false, false).singular_values;
        if sv.min() > 1e-3 * sv.max() {
            let inv = s.clone().try_inverse().unwrap();
            return &s * j * inv;
        }
    }
}

/// Independent Kronecker solve of `P X + X Q = R`.
pub fn kronecker_oracle(p: &Matrix, q: &Matrix, r: &Matrix) -> Option<Matrix> {
    let (n, m) = (p.nrows(), q.nrows());
    let mut k = Matrix::zeros(n * m, n * m);
    for j in 0..m {
        for i in 0..n {
            for l in 0..n {
                k[(j * n + i, j * n + l)] += p[(i, l)];
            }
            for l in 0..m {
                k[(j * n + i, l * n + i)] += q[(l, j)];
            }
        }
    }
    let sv = k.clone().svd(false, false).singular_values;
    if sv.min() < 1e-8 * sv.max() {
        return None;
    }
    let rhs = Vector::from_column_slice(r.as_slice());
    let x = k.lu().solve(&rhs)?;
    Some(Matrix::from_column_slice(n, m, x.as_slice()))
}

/// Row-wise extrema of `A v` over every vertex of the box.
pub fn vertex_extrema(a: &Matrix, low: &Vector, high: &Vector) -> (Vector, Vector) {
    let n = low.len();
    let mut lo = Vector::from_element(a.nrows(), f64::INFINITY);
    let mut hi = Vector::from_element(a.nrows(), f64::NEG_INFINITY);
    for mask in 0u32..(1 << n) {
        let v = Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { high[i] } else { low[i] });
        let img = a * v;
        for r in 0..a.nrows() {
            lo[r] = lo[r].min(img[r]);
            hi[r] = hi[r].max(img[r]);
        }
    }
    (lo, hi)
}

/// 1. Decomposition blocks of the 4-state DT example.
pub fn c1_decomposition() -> Outcome {
    let b = bundle(&presets::paper_dt());
    let d = &b.dec;
    let f_o = Matrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, -1.0, 0.0]);
    let h_o = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
    let mut m_o = Matrix::zeros(4, 3);
    m_o[(0, 0)] = 1.0;
    m_o[(2, 1)] = 1.0;
    m_o[(3, 2)] = 1.0;
    let mut m_no = Matrix::zeros(4, 1);
    m_no[(1, 0)] = 1.0;
    if d.n_o != 3 {
        return Outcome::new(false, format!("rank(O) = {}", d.n_o));
    }
    let dev = [
        max_dev(&d.f_o, &f_o),
        max_dev(&d.h_o, &h_o),
        max_dev(&d.f_no, &Matrix::from_element(1, 1, -0.5)),
        max_dev(&d.basis_o, &m_o),
        max_dev(&d.basis_no, &m_no),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Outcome::new(dev <= 1e-12, format!("rank 3, max deviation {dev:.1e}"))
}

/// 2. Sylvester transform and sign-flip transform with the example gains.
pub fn c2_sylvester_and_jordan() -> Outcome {
    let b = bundle(&presets::paper_dt());
    let (d, s) = (&b.dec, &b.design);
    let residual = s.relative_residual(d);
    // t_i = b_i H_o (F_o - a_i I)^-1
    let mut oracle = Matrix::zeros(3, 3);
    for i in 0..3 {
        let a = s.a_o[(i, i)];
        let inv = (&d.f_o - Matrix::identity(3, 3) * a).try_inverse().unwrap();
        let row = &d.h_o * inv * s.b_o[(i, 0)];
        oracle.set_row(i, &row.row(0));
    }
    let t_dev = max_dev(&s.t, &oracle);
    let t11 = (s.t[(0, 0)] + 10.0 / 11.0).abs();
    let invertible = s.t.clone().try_inverse().is_some() && s.t_rcond >= 1e-9;
    let lambda_exact = b.jt.lambda == Matrix::from_element(1, 1, 0.5);
    let sign_exact = (0..=100).all(|t| {
        let want = if t % 2 == 0 { 1.0 } else { -1.0 };
        let (p, p_inv) = b.jt.transform_at(t as f64);
        p[(0, 0)] == want && p_inv[(0, 0)] == want
    });
    Outcome::new(
        residual <= 1e-10 && t_dev <= 1e-12 && t11 <= 1e-12 && invertible && lambda_exact && sign_exact,
        format!(
            "residual {residual:.1e}, |T11 + 10/11| {t11:.1e}, T vs row oracle {t_dev:.1e}, \
             Lambda = 0.5 exact: {lambda_exact}, P_t = (-1)^t exact: {sign_exact}"
        ),
    )
}

/// Plant recursion written out independently of the harness.
fn plant_oracle(cfg: &ScenarioConfig, n: usize) -> Vec<Vector> {
    let s = cfg.scenario().unwrap();
    let mut x = s.x0.clone();
    let mut out = vec![x.clone()];
    for k in 0..n {
        let t = k as f64;
        x = &s.system.f * &x + s.u.eval(t) + &s.system.d * s.d.eval(t);
        out.push(x.clone());
    }
    out
}

/// 3. Containment for both forms over 300 steps.
pub fn c3_containment() -> Outcome {
    let cfg = presets::paper_dt();
    let s = cfg.scenario().unwrap();
    let b = bundle(&cfg);
    let truth = plant_oracle(&cfg, 300);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut plant_dev: f64 = 0.0;
    for form in [ObserverForm::Cascade, ObserverForm::Direct] {
        let (tr, rep) = sim::run_pipeline(&s, &b, &steps(300), form).unwrap();
        violations += rep.violations;
        for (k, x) in truth.iter().enumerate() {
            plant_dev = plant_dev.max((&tr.x[k] - x).amax());
            for i in 0..4 {
                let slack = (x[i] - tr.upper[k][i]).max(tr.lower[k][i] - x[i]);
                worst = worst.max(slack);
                if slack > 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(
        violations == 0 && plant_dev == 0.0,
        format!("violations {violations}, worst slack {worst:.2e}, plant vs oracle {plant_dev:.1e}"),
    )
}

/// 4. Cascade and direct bounds agree.
pub fn c4_equivalence() -> Outcome {
    let cfg = presets::paper_dt();
    let s = cfg.scenario().unwrap();
    let b = bundle(&cfg);
    let (c, _) = sim::run_pipeline(&s, &b, &steps(300), ObserverForm::Cascade).unwrap();
    let (d, _) = sim::run_pipeline(&s, &b, &steps(300), ObserverForm::Direct).unwrap();
    let gap = (0..c.times.len())
        .map(|k| (&c.upper[k] - &d.upper[k]).amax().max((&c.lower[k] - &d.lower[k]).amax()))
        .fold(0.0, f64::max);
    Outcome::new(
        c.times.len() == 301 && gap <= 1e-9,
        format!("{} records, max gap {gap:.2e}", c.times.len()),
    )
}

/// 5. Without uncertainty the widths vanish.
pub fn c5_zero_uncertainty() -> Outcome {
    let cfg = presets::paper_dt().without_uncertainty();
    let s = cfg.scenario().unwrap();
    let b = bundle(&cfg);
    let (tr, _) = sim::run_pipeline(&s, &b, &steps(300), ObserverForm::Cascade).unwrap();
    let late = tr
        .times
        .iter()
        .zip(tr.widths())
        .filter(|(t, _)| **t >= 60.0)
        .map(|(_, w)| w.amax())
        .fold(0.0, f64::max);
    // Geometric-series oracle: the slowest rate is max(rho(A_o), |Lambda|) = 0.5.
    let rate = 0.5f64;
    let initial = tr.widths()[0].amax();
    Outcome::new(
        late <= 1e-10,
        format!("max width for t >= 60: {late:.2e} (decay oracle {:.1e})", initial * rate.powi(60)),
    )
}

/// 6. Monte Carlo containment, deterministic per seed.
pub fn c6_monte_carlo() -> Outcome {
    let cfg = presets::paper_dt();
    let s = cfg.scenario().unwrap();
    let b = bundle(&cfg);
    let run = SimulationConfig {
        horizon: Horizon::Steps(200),
        trials: 100,
        seed: 7,
        ..Default::default()
    };
    let a = sim::monte_carlo(&s, &b, &run, ObserverForm::Cascade).unwrap();
    let again = sim::monte_carlo(&s, &b, &run, ObserverForm::Cascade).unwrap();
    let same = a.same_outcome(&again);
    Outcome::new(
        a.violations == 0 && same && a.trials == 100,
        format!("violations {}, worst slack {:.2e}, repeatable: {same}", a.violations, a.worst_slack),
    )
}

/// 7. Transform identities on random semisimple blocks.
pub fn c7_jordan_identities() -> Outcome {
    let mut r = rng(2024);
    let mut worst_dt: f64 = 0.0;
    let mut worst_ct: f64 = 0.0;
    let mut sigma_ok = true;
    let mut structure_ok = true;
    for case in 0..200 {
        let n = 1 + case % 6;
        let f = random_semisimple(n, true, &mut r);
        let jt = match build_transform(&f, TimeDomain::Dt, 1e6) {
            Ok(j) => j,
            Err(e) => return Outcome::new(false, format!("DT case {case}: {e}")),
        };
        structure_ok &= jt.lambda.iter().all(|v| *v >= 0.0)
            && jt.lambda.clone().complex_eigenvalues().iter().all(|e| e.norm() < 1.0);
        for t in 0..=50 {
            let (_, p_inv) = jt.transform_at(t as f64);
            let (p_next, _) = jt.transform_at(t as f64 + 1.0);
            worst_dt = worst_dt.max((&jt.lambda - p_next * &f * p_inv).norm());
            sigma_ok &= sampled_sigma_ok(&jt, t as f64);
        }
    }
    for case in 0..200 {
        let n = 1 + case % 6;
        let f = random_semisimple(n, false, &mut r);
        let jt = match build_transform(&f, TimeDomain::Ct, 1e6) {
            Ok(j) => j,
            Err(e) => return Outcome::new(false, format!("CT case {case}: {e}")),
        };
        let l = &jt.lambda;
        structure_ok &= (0..n).all(|i| (0..n).all(|j| i == j || l[(i, j)] >= 0.0))
            && l.clone().complex_eigenvalues().iter().all(|e| e.re < 0.0);
        for k in 0..=50 {
            let t = k as f64 * 0.37;
            let (p, _) = jt.transform_at(t);
            let dp = jt.derivative_at(t);
            worst_ct = worst_ct.max((l * &p - dp - &p * &f).norm());
            sigma_ok &= sampled_sigma_ok(&jt, t);
        }
    }
    Outcome::new(
        worst_dt <= 1e-9 && worst_ct <= 1e-9 && sigma_ok && structure_ok,
        format!(
            "DT residual {worst_dt:.1e}, CT residual {worst_ct:.1e}, sigma bound holds: {sigma_ok}, \
             Lambda structure: {structure_ok}"
        ),
    )
}

fn sampled_sigma_ok(jt: &interval_observer::jordan::JordanTransform, t: f64) -> bool {
    let (p, p_inv) = jt.transform_at(t);
    let two = |m: &Matrix| m.clone().svd(false, false).singular_values.max();
    two(&p) + two(&p_inv) <= jt.sigma * (1.0 + 1e-12)
}

/// 8. Interval image soundness and tightness.
pub fn c8_interval_image() -> Outcome {
    let mut r = rng(8);
    let mut contained = true;
    let mut tight: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.random_range(1..=10);
        let m = r.random_range(1..=6);
        let a = random_matrix(m, n, &mut r) * 3.0;
        let low = Vector::from_fn(n, |_, _| r.random_range(-2.0..2.0));
        let high = Vector::from_fn(n, |i, _| low[i] + r.random_range(0.0..2.0));
        let p = Vector::from_fn(n, |i, _| low[i] + r.random_range(0.0..=1.0) * (high[i] - low[i]));
        let (lo, hi) = interval_image(&a, &low, &high).unwrap();
        let img = &a * &p;
        contained &= (0..m).all(|i| lo[i] - 1e-12 <= img[i] && img[i] <= hi[i] + 1e-12);
        if n <= 8 {
            let (vlo, vhi) = vertex_extrema(&a, &low, &high);
            tight = tight.max((&lo - vlo).amax()).max((&hi - vhi).amax());
        }
    }
    Outcome::new(
        contained && tight <= 1e-12,
        format!("containment: {contained}, max gap to vertex extrema {tight:.1e}"),
    )
}

/// 9. Schur-based Sylvester solver against the Kronecker oracle.
pub fn c9_sylvester_solver() -> Outcome {
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 100 {
        let n = r.random_range(1..=6);
        let m = r.random_range(1..=6);
        let p = random_matrix(n, n, &mut r);
        let q = random_matrix(m, m, &mut r);
        let rhs = random_matrix(n, m, &mut r);
        let Some(want) = kronecker_oracle(&p, &q, &rhs) else {
            continue;
        };
        let got = match solve_sylvester_schur(&p, &q, &rhs) {
            Ok(x) => x,
            Err(e) => return Outcome::new(false, format!("instance {done}: {e}")),
        };
        worst = worst.max((&got - &want).norm() / want.norm().max(f64::MIN_POSITIVE));
        done += 1;
    }
    Outcome::new(worst <= 1e-9, format!("max relative error {worst:.1e}"))
}

/// 10. Continuous-time desk example.
pub fn c10_ct_example() -> Outcome {
    let cfg = presets::paper_ct();
    let s = cfg.scenario().unwrap();
    let b = bundle(&cfg);
    let decomp_ok = b.dec.n_o == 1 && (b.dec.f_no[(0, 0)] + 2.0).abs() <= 1e-12;
    let run = SimulationConfig {
        horizon: Horizon::FinalTime(10.0),
        ct_step: 1e-3,
        ..Default::default()
    };
    let (_, rep) = sim::run_pipeline(&s, &b, &run, ObserverForm::Cascade).unwrap();
    let contained = rep.violations == 0 && rep.worst_slack <= 1e-6;

    // Without uncertainty every width is a e^{r1 t} + b e^{r2 t} with r1 = A_o, r2 = Lambda.
    let zero = cfg.clone().without_uncertainty();
    let zs = zero.scenario().unwrap();
    let zb = bundle(&zero);
    let (r1, r2) = (zb.design.a_o[(0, 0)], zb.jt.lambda[(0, 0)]);
    let (tr, _) = sim::run_pipeline(&zs, &zb, &run, ObserverForm::Cascade).unwrap();
    let widths = tr.widths();
    let at = |t: f64| &widths[(t / run.ct_step).round() as usize];
    let basis = |t: f64| [f64::exp(r1 * t), f64::exp(r2 * t)];
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let (t1, t2) = (1.0, 2.0);
        let m = nalgebra::Matrix2::new(basis(t1)[0], basis(t1)[1], basis(t2)[0], basis(t2)[1]);
        let coef = m.try_inverse().unwrap() * nalgebra::Vector2::new(at(t1)[i], at(t2)[i]);
        for t in [4.0, 6.0, 8.0, 10.0] {
            let [e1, e2] = basis(t);
            let want = coef[0] * e1 + coef[1] * e2;
            // Widths are differences of O(1) bounds: allow a 1e-12 rounding floor.
            let err = (at(t)[i] - want).abs() / (want.abs() + 1e-6);
            worst = worst.max(err);
        }
    }
    // i.e. |err| <= 1e-6 |want| + 1e-12
    let decay_ok = worst <= 1e-6;
    Outcome::new(
        decomp_ok && contained && decay_ok,
        format!(
            "n_o {}, F_no {:.3}, worst slack {:.2e}, decay vs exp({r1} t), exp({r2} t) fit: rel err {worst:.1e}",
            b.dec.n_o,
            b.dec.f_no[(0, 0)],
            rep.worst_slack
        ),
    )
}

pub type Check = fn() -> Outcome;

pub const CRITERIA: [(&str, Check); 10] = [
    ("1 decomposition of the DT example", c1_decomposition),
    ("2 Sylvester transform and sign flip", c2_sylvester_and_jordan),
    ("3 containment, cascade and direct", c3_containment),
    ("4 cascade/direct equivalence", c4_equivalence),
    ("5 zero-uncertainty convergence", c5_zero_uncertainty),
    ("6 Monte Carlo containment", c6_monte_carlo),
    ("7 transform identities", c7_jordan_identities),
    ("8 interval image", c8_interval_image),
    ("9 Sylvester solver vs Kronecker", c9_sylvester_solver),
    ("10 CT desk example", c10_ct_example),
];
