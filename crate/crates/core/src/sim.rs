//! Plant + observer simulation, containment metrics and Monte Carlo campaigns.
//!
//! DT runs the exact recursion. CT integrates plant and observer together with
//! classical fixed-step RK4, so both see the same stage times.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignBundle;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{EnvelopeSample, Scenario, TimeDomain, UncertaintyBounds};
use crate::observer::{stack, Bounds, CascadeObserver, DirectObserver, DirectObserverState, ObserverState};
use crate::signal::{sample_vector_in_box, VectorSignal, RNG_ALGORITHM};

/// Containment slack tolerated in DT.
pub const DT_SLACK_TOL: f64 = 1e-9;
/// Containment slack tolerated in CT (integration error budget).
pub const CT_SLACK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Steps(usize),
    FinalTime(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: Horizon,
    pub ct_step: f64,
    pub record_stride: usize,
    pub seed: u64,
    pub trials: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon: Horizon::Steps(300),
            ct_step: 1e-3,
            record_stride: 1,
            seed: 0,
            trials: 1,
        }
    }
}

impl SimulationConfig {
    pub fn steps(&self, domain: TimeDomain) -> usize {
        match (self.horizon, domain) {
            (Horizon::Steps(n), _) => n,
            (Horizon::FinalTime(t), TimeDomain::Dt) => t.ceil().max(0.0) as usize,
            (Horizon::FinalTime(t), TimeDomain::Ct) => (t / self.ct_step).round().max(0.0) as usize,
        }
    }

    fn time_of(&self, k: usize, domain: TimeDomain) -> f64 {
        match domain {
            TimeDomain::Dt => k as f64,
            TimeDomain::Ct => k as f64 * self.ct_step,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ct_step.is_nan() || self.ct_step <= 0.0 {
            return Err(Error::Config("ct_step must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObserverForm {
    Cascade,
    Direct,
}

/// One realization of the exogenous signals; `k` is the index of the step containing `t`.
pub trait Exogenous: Sync {
    fn u(&self, t: f64) -> Vector;
    fn d(&self, t: f64, k: usize) -> Vector;
    fn w(&self, t: f64, k: usize) -> Vector;
}

/// The scenario's own deterministic signals.
pub struct ScenarioSignals<'a>(pub &'a Scenario);

impl Exogenous for ScenarioSignals<'_> {
    fn u(&self, t: f64) -> Vector {
        self.0.u.eval(t)
    }
    fn d(&self, t: f64, _k: usize) -> Vector {
        self.0.d.eval(t)
    }
    fn w(&self, t: f64, _k: usize) -> Vector {
        self.0.w.eval(t)
    }
}

/// Per-step random realization: on step `k` the disturbance is
/// `lower(t) + θ_k (upper(t) − lower(t))` with `θ_k ∈ [0, 1]` drawn once per step,
/// so it respects the envelope at every stage time.
pub struct SampledSignals<'a> {
    pub u: &'a VectorSignal,
    pub bounds: &'a UncertaintyBounds,
    pub theta_d: Vec<Vector>,
    pub theta_w: Vec<Vector>,
}

impl<'a> SampledSignals<'a> {
    pub fn draw(
        u: &'a VectorSignal,
        bounds: &'a UncertaintyBounds,
        steps: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let nd = bounds.d_upper.dim();
        let nw = bounds.w_upper.dim();
        let mut draw = |n: usize| -> Result<Vec<Vector>> {
            (0..=steps)
                .map(|_| sample_vector_in_box(&Vector::zeros(n), &Vector::from_element(n, 1.0), rng))
                .collect()
        };
        let theta_d = draw(nd)?;
        let theta_w = draw(nw)?;
        Ok(SampledSignals {
            u,
            bounds,
            theta_d,
            theta_w,
        })
    }
}

fn blend(lower: Vector, upper: Vector, theta: &Vector) -> Vector {
    let gap = &upper - &lower;
    let mut out = lower + gap.component_mul(theta);
    // Guard the last ulp.
    for i in 0..out.len() {
        out[i] = out[i].min(upper[i]);
    }
    out
}

impl Exogenous for SampledSignals<'_> {
    fn u(&self, t: f64) -> Vector {
        self.u.eval(t)
    }
    fn d(&self, t: f64, k: usize) -> Vector {
        let th = &self.theta_d[k.min(self.theta_d.len() - 1)];
        blend(self.bounds.d_lower.eval(t), self.bounds.d_upper.eval(t), th)
    }
    fn w(&self, t: f64, k: usize) -> Vector {
        let th = &self.theta_w[k.min(self.theta_w.len() - 1)];
        blend(self.bounds.w_lower.eval(t), self.bounds.w_upper.eval(t), th)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
}

fn plant_rhs(s: &Scenario, exo: &dyn Exogenous, x: &Vector, t: f64, k: usize) -> Vector {
    &s.system.f * x + exo.u(t) + &s.system.d * exo.d(t, k)
}

fn output(s: &Scenario, exo: &dyn Exogenous, x: &Vector, t: f64, k: usize) -> Vector {
    &s.system.h * x + &s.system.w * exo.w(t, k)
}

fn rk4(f: impl Fn(f64, &Vector) -> Vector, t: f64, z: &Vector, h: f64) -> Vector {
    let k1 = f(t, z);
    let k2 = f(t + 0.5 * h, &(z + &k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(z + &k2 * (0.5 * h)));
    let k4 = f(t + h, &(z + &k3 * h));
    z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn ensure_finite(v: &Vector, t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence(t))
    }
}

/// Plant only, with the scenario's own signals.
pub fn simulate_plant(scenario: &Scenario, config: &SimulationConfig) -> Result<StateTrajectory> {
    simulate_plant_with(scenario, config, &ScenarioSignals(scenario), &scenario.x0)
}

pub fn simulate_plant_with(
    scenario: &Scenario,
    config: &SimulationConfig,
    exo: &dyn Exogenous,
    x0: &Vector,
) -> Result<StateTrajectory> {
    config.validate()?;
    let domain = scenario.system.domain;
    let n = config.steps(domain);
    let h = config.ct_step;
    let mut out = StateTrajectory {
        times: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
    };
    let mut x = x0.clone();
    for k in 0..=n {
        let t = config.time_of(k, domain);
        if k % config.record_stride == 0 || k == n {
            out.times.push(t);
            out.y.push(output(scenario, exo, &x, t, k));
            out.x.push(x.clone());
        }
        if k == n {
            break;
        }
        x = match domain {
            TimeDomain::Dt => plant_rhs(scenario, exo, &x, t, k),
            TimeDomain::Ct => rk4(|s, z| plant_rhs(scenario, exo, z, s, k), t, &x, h),
        };
        ensure_finite(&x, t)?;
    }
    Ok(out)
}

/// Recorded bounds of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vector>,
    pub upper: Vec<Vector>,
    pub lower: Vec<Vector>,
    /// Per-record `z_o` / `z_no` bounds (cascade form only).
    pub zo: Option<Vec<Bounds>>,
    pub zno: Option<Vec<Bounds>>,
    pub slack: Vec<f64>,
}

impl IntervalTrajectory {
    pub fn widths(&self) -> Vec<Vector> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }

    /// CSV with columns `t, x_i, xupper_i, xlower_i (i = 1..n), width_i (i = 1..n)`,
    /// numbers at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.x.first().map(|v| v.len()).unwrap_or(0);
        let mut header = vec!["t".to_string()];
        for i in 1..=n {
            header.push(format!("x_{i}"));
            header.push(format!("xupper_{i}"));
            header.push(format!("xlower_{i}"));
        }
        for i in 1..=n {
            header.push(format!("width_{i}"));
        }
        writeln!(out, "{}", header.join(","))?;
        for r in 0..self.times.len() {
            let mut row = vec![fmt17(self.times[r])];
            for i in 0..n {
                row.push(fmt17(self.x[r][i]));
                row.push(fmt17(self.upper[r][i]));
                row.push(fmt17(self.lower[r][i]));
            }
            for i in 0..n {
                row.push(fmt17(self.upper[r][i] - self.lower[r][i]));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub trials: usize,
    pub steps: usize,
    /// Number of (trial, step) pairs whose slack exceeds `tolerance`.
    pub violations: usize,
    pub worst_slack: f64,
    pub tolerance: f64,
    pub max_width: Vec<f64>,
    pub mean_width: Vec<f64>,
    pub final_width: Vec<f64>,
    /// Geometric decay of the largest width per step (DT) or per time unit (CT);
    /// `None` when the run is too short to tell.
    pub decay_rate: Option<f64>,
    pub cooperative: bool,
    pub rng: String,
    pub seed: u64,
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Same outcome ignoring wall-clock runtime.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.runtime_secs = other.runtime_secs;
        &a == other
    }

    pub fn summary(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "trials: {}\nsteps: {}\nviolations: {}\nworst slack: {:.3e} (tolerance {:.1e})\n\
             max width: [{}]\nmean width: [{}]\nfinal width: [{}]\ndecay rate: {}\n\
             cooperative: {}\nrng: {} seed {}\nruntime: {:.3} s",
            self.trials,
            self.steps,
            self.violations,
            self.worst_slack,
            self.tolerance,
            fmt(&self.max_width),
            fmt(&self.mean_width),
            fmt(&self.final_width),
            self.decay_rate.map_or("n/a".to_string(), |r| format!("{r:.6}")),
            self.cooperative,
            self.rng,
            self.seed,
            self.runtime_secs
        )
    }
}

/// Packed-state view shared by both observer forms.
trait Engine {
    fn init(&self, hi: &Vector, lo: &Vector) -> Vector;
    fn rhs(&self, s: &Vector, t: f64, y: &Vector, u: &Vector, env: &EnvelopeSample) -> Vector;
    fn x_bounds(&self, s: &Vector, t: f64) -> Bounds;
    fn z_bounds(&self, _s: &Vector, _t: f64) -> Option<(Bounds, Bounds)> {
        None
    }
    fn initial_z_bounds(&self, _hi: &Vector, _lo: &Vector) -> Option<(Bounds, Bounds)> {
        None
    }
}

impl Engine for CascadeObserver<'_> {
    fn init(&self, hi: &Vector, lo: &Vector) -> Vector {
        self.initial_state(hi, lo).pack()
    }
    fn rhs(&self, s: &Vector, t: f64, y: &Vector, u: &Vector, env: &EnvelopeSample) -> Vector {
        let st = ObserverState::unpack(s, self.dec.n_o, self.dec.n_no);
        self.step(&st, t, y, u, env).pack()
    }
    fn x_bounds(&self, s: &Vector, t: f64) -> Bounds {
        CascadeObserver::x_bounds(self, &ObserverState::unpack(s, self.dec.n_o, self.dec.n_no), t)
    }
    fn z_bounds(&self, s: &Vector, t: f64) -> Option<(Bounds, Bounds)> {
        Some(CascadeObserver::z_bounds(
            self,
            &ObserverState::unpack(s, self.dec.n_o, self.dec.n_no),
            t,
        ))
    }
    fn initial_z_bounds(&self, hi: &Vector, lo: &Vector) -> Option<(Bounds, Bounds)> {
        Some(CascadeObserver::initial_z_bounds(self, hi, lo))
    }
}

impl Engine for DirectObserver {
    fn init(&self, hi: &Vector, lo: &Vector) -> Vector {
        self.initial_state(hi, lo).pack()
    }
    fn rhs(&self, s: &Vector, t: f64, y: &Vector, u: &Vector, env: &EnvelopeSample) -> Vector {
        self.step(&DirectObserverState::unpack(s, self.dim()), t, y, u, env)
            .pack()
    }
    fn x_bounds(&self, s: &Vector, t: f64) -> Bounds {
        self.bounds(&DirectObserverState::unpack(s, self.dim()), t)
    }
}

fn check_envelope(env: &EnvelopeSample, d: &Vector, w: &Vector, t: f64) -> Result<()> {
    let inside = |lo: &Vector, v: &Vector, hi: &Vector| {
        (0..v.len()).all(|i| {
            let eps = 1e-12 * (1.0 + v[i].abs());
            lo[i] - eps <= v[i] && v[i] <= hi[i] + eps
        })
    };
    if !inside(&env.d_lower, d, &env.d_upper) {
        return Err(Error::EnvelopeViolation {
            signal: "disturbance d".into(),
            t,
        });
    }
    if !inside(&env.w_lower, w, &env.w_upper) {
        return Err(Error::EnvelopeViolation {
            signal: "noise w".into(),
            t,
        });
    }
    Ok(())
}

/// Lockstep plant + observer run on the scenario's own signals.
pub fn run_pipeline(
    scenario: &Scenario,
    bundle: &DesignBundle,
    config: &SimulationConfig,
    form: ObserverForm,
) -> Result<(IntervalTrajectory, ContainmentReport)> {
    run_realization(scenario, bundle, config, form, &ScenarioSignals(scenario), &scenario.x0)
}

/// Lockstep run on an arbitrary realization and initial state.
pub fn run_realization(
    scenario: &Scenario,
    bundle: &DesignBundle,
    config: &SimulationConfig,
    form: ObserverForm,
    exo: &dyn Exogenous,
    x0: &Vector,
) -> Result<(IntervalTrajectory, ContainmentReport)> {
    config.validate()?;
    let started = Instant::now();
    let (traj, mut report) = match form {
        ObserverForm::Cascade => run_engine(scenario, bundle, config, &bundle.cascade(), exo, x0)?,
        ObserverForm::Direct => run_engine(scenario, bundle, config, &bundle.direct(), exo, x0)?,
    };
    report.runtime_secs = started.elapsed().as_secs_f64();
    Ok((traj, report))
}

fn run_engine(
    scenario: &Scenario,
    bundle: &DesignBundle,
    config: &SimulationConfig,
    engine: &dyn Engine,
    exo: &dyn Exogenous,
    x0: &Vector,
) -> Result<(IntervalTrajectory, ContainmentReport)> {
    let domain = scenario.system.domain;
    let n = config.steps(domain);
    let h = config.ct_step;
    let nx = scenario.system.nx();
    let b = &scenario.bounds;
    let tolerance = match domain {
        TimeDomain::Dt => DT_SLACK_TOL,
        TimeDomain::Ct => CT_SLACK_TOL,
    };

    let mut traj = IntervalTrajectory {
        times: Vec::new(),
        x: Vec::new(),
        upper: Vec::new(),
        lower: Vec::new(),
        zo: engine.initial_z_bounds(&b.x0_upper, &b.x0_lower).map(|_| Vec::new()),
        zno: engine.initial_z_bounds(&b.x0_upper, &b.x0_lower).map(|_| Vec::new()),
        slack: Vec::new(),
    };
    let mut violations = 0;
    let mut worst_slack = f64::NEG_INFINITY;
    let mut max_width = vec![0.0; nx];
    let mut sum_width = vec![0.0; nx];
    let mut largest_series = Vec::with_capacity(n + 1);

    let mut x = x0.clone();
    let mut s = engine.init(&b.x0_upper, &b.x0_lower);
    let ns = s.len();

    for k in 0..=n {
        let t = config.time_of(k, domain);
        let env = b.at(t);
        let d = exo.d(t, k);
        let w = exo.w(t, k);
        check_envelope(&env, &d, &w, t)?;
        let u = exo.u(t);
        let y = &scenario.system.h * &x + &scenario.system.w * &w;

        let (xb, zb) = if k == 0 {
            (
                Bounds::new(b.x0_upper.clone(), b.x0_lower.clone()),
                engine.initial_z_bounds(&b.x0_upper, &b.x0_lower),
            )
        } else {
            (engine.x_bounds(&s, t), engine.z_bounds(&s, t))
        };
        let slack = xb.slack(&x);
        if slack > tolerance {
            violations += 1;
        }
        worst_slack = worst_slack.max(slack);
        let width = xb.width();
        for i in 0..nx {
            max_width[i] = f64::max(max_width[i], width[i]);
            sum_width[i] += width[i];
        }
        largest_series.push(width.amax());

        if k % config.record_stride == 0 || k == n {
            traj.times.push(t);
            traj.x.push(x.clone());
            if let (Some(zo), Some(zno), Some((bo, bno))) = (traj.zo.as_mut(), traj.zno.as_mut(), zb) {
                zo.push(bo);
                zno.push(bno);
            }
            traj.upper.push(xb.upper);
            traj.lower.push(xb.lower);
            traj.slack.push(slack);
        }
        if k == n {
            break;
        }

        match domain {
            TimeDomain::Dt => {
                s = engine.rhs(&s, t, &y, &u, &env);
                x = &scenario.system.f * &x + &u + &scenario.system.d * &d;
            }
            TimeDomain::Ct => {
                let z = stack(&[&x, &s]);
                let f = |tau: f64, z: &Vector| {
                    let xs = z.rows(0, nx).into_owned();
                    let ss = z.rows(nx, ns).into_owned();
                    let u = exo.u(tau);
                    let y = &scenario.system.h * &xs + &scenario.system.w * exo.w(tau, k);
                    let dx = &scenario.system.f * &xs + &u + &scenario.system.d * exo.d(tau, k);
                    let ds = engine.rhs(&ss, tau, &y, &u, &b.at(tau));
                    stack(&[&dx, &ds])
                };
                let z = rk4(f, t, &z, h);
                x = z.rows(0, nx).into_owned();
                s = z.rows(nx, ns).into_owned();
            }
        }
        ensure_finite(&x, t)?;
        ensure_finite(&s, t)?;
    }

    let steps_total = (n + 1) as f64;
    let final_width = traj
        .upper
        .last()
        .zip(traj.lower.last())
        .map(|(u, l)| (u - l).iter().copied().collect())
        .unwrap_or_default();
    let report = ContainmentReport {
        trials: 1,
        steps: n,
        violations,
        worst_slack,
        tolerance,
        max_width,
        mean_width: sum_width.iter().map(|s| s / steps_total).collect(),
        final_width,
        decay_rate: decay_rate(&largest_series, config, domain),
        cooperative: bundle.cooperative_ok(),
        rng: RNG_ALGORITHM.to_string(),
        seed: config.seed,
        runtime_secs: 0.0,
    };
    Ok((traj, report))
}

/// `(w_end / w_1)^(1 / elapsed)` between the first post-initial sample and the end.
fn decay_rate(series: &[f64], config: &SimulationConfig, domain: TimeDomain) -> Option<f64> {
    if series.len() < 3 {
        return None;
    }
    let (first, last) = (series[1], series[series.len() - 1]);
    let elapsed = config.time_of(series.len() - 1, domain) - config.time_of(1, domain);
    if first <= 0.0 {
        return Some(0.0);
    }
    Some((last / first).powf(1.0 / elapsed))
}

/// Runs `config.trials` independent realizations: `x0` drawn uniformly in the
/// initial box, disturbance/noise drawn per step inside their envelopes.
/// Trial `i` uses the ChaCha8 stream `i` of `config.seed`.
pub fn monte_carlo(
    scenario: &Scenario,
    bundle: &DesignBundle,
    config: &SimulationConfig,
    form: ObserverForm,
) -> Result<ContainmentReport> {
    config.validate()?;
    if config.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let started = Instant::now();
    let steps = config.steps(scenario.system.domain);
    let b = &scenario.bounds;
    let reports: Vec<ContainmentReport> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let x0 = sample_vector_in_box(&b.x0_lower, &b.x0_upper, &mut rng)?;
            let exo = SampledSignals::draw(&scenario.u, b, steps, &mut rng)?;
            run_realization(scenario, bundle, config, form, &exo, &x0).map(|(_, r)| r)
        })
        .collect::<Result<_>>()?;

    let mut agg = reports[0].clone();
    for r in &reports[1..] {
        agg.violations += r.violations;
        agg.worst_slack = agg.worst_slack.max(r.worst_slack);
        for i in 0..agg.max_width.len() {
            agg.max_width[i] = agg.max_width[i].max(r.max_width[i]);
            agg.mean_width[i] += r.mean_width[i];
            agg.final_width[i] = agg.final_width[i].max(r.final_width[i]);
        }
        agg.decay_rate = match (agg.decay_rate, r.decay_rate) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }
    let trials = config.trials as f64;
    for m in agg.mean_width.iter_mut() {
        *m /= trials;
    }
    agg.trials = config.trials;
    agg.runtime_secs = started.elapsed().as_secs_f64();
    Ok(agg)
}
