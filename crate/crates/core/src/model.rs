//! The plant `x⁺ = F x + u + D d`, `y = H x + W w` and its uncertainty envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::signal::VectorSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeDomain {
    /// Continuous time: `x⁺` is the derivative.
    Ct,
    /// Discrete time: `x⁺` is the next sample.
    Dt,
}

impl TimeDomain {
    /// Hurwitz in CT, Schur in DT.
    pub fn is_stable(self, m: &Matrix, margin: f64) -> bool {
        match self {
            TimeDomain::Ct => crate::linalg::is_hurwitz(m, margin),
            TimeDomain::Dt => crate::linalg::is_schur(m, margin),
        }
    }

    /// Metzler in CT, non-negative in DT.
    pub fn is_cooperative(self, m: &Matrix) -> bool {
        match self {
            TimeDomain::Ct => crate::linalg::is_metzler(m),
            TimeDomain::Dt => crate::linalg::is_nonnegative(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub domain: TimeDomain,
    pub f: Matrix,
    pub d: Matrix,
    pub h: Matrix,
    pub w: Matrix,
}

impl LtiSystem {
    /// Checks shapes and finiteness.
    pub fn new(domain: TimeDomain, f: Matrix, d: Matrix, h: Matrix, w: Matrix) -> Result<Self> {
        let sys = LtiSystem { domain, f, d, h, w };
        let problems = sys.shape_diagnostics();
        if problems.is_empty() {
            Ok(sys)
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn nx(&self) -> usize {
        self.f.nrows()
    }
    pub fn nd(&self) -> usize {
        self.d.ncols()
    }
    pub fn ny(&self) -> usize {
        self.h.nrows()
    }
    pub fn nw(&self) -> usize {
        self.w.ncols()
    }

    fn shape_diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let nx = self.f.nrows();
        if nx == 0 || self.f.ncols() != nx {
            out.push(format!(
                "dimension: F must be square and non-empty, got {}x{}",
                self.f.nrows(),
                self.f.ncols()
            ));
        }
        if self.d.nrows() != nx {
            out.push(format!("dimension: D has {} rows, expected {nx}", self.d.nrows()));
        }
        if self.h.nrows() == 0 {
            out.push("dimension: H needs at least one row".into());
        }
        if self.h.ncols() != nx {
            out.push(format!("dimension: H has {} columns, expected {nx}", self.h.ncols()));
        }
        if self.w.nrows() != self.h.nrows() {
            out.push(format!(
                "dimension: W has {} rows, expected {}",
                self.w.nrows(),
                self.h.nrows()
            ));
        }
        for (name, m) in [("F", &self.f), ("D", &self.d), ("H", &self.h), ("W", &self.w)] {
            if m.iter().any(|v| !v.is_finite()) {
                out.push(format!("finiteness: {name} has a non-finite entry"));
            }
        }
        out
    }
}

/// Known envelopes on the initial state, disturbance and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyBounds {
    pub x0_upper: Vector,
    pub x0_lower: Vector,
    pub d_upper: VectorSignal,
    pub d_lower: VectorSignal,
    pub w_upper: VectorSignal,
    pub w_lower: VectorSignal,
}

/// Envelope values at a single instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSample {
    pub d_upper: Vector,
    pub d_lower: Vector,
    pub w_upper: Vector,
    pub w_lower: Vector,
}

impl UncertaintyBounds {
    pub fn at(&self, t: f64) -> EnvelopeSample {
        EnvelopeSample {
            d_upper: self.d_upper.eval(t),
            d_lower: self.d_lower.eval(t),
            w_upper: self.w_upper.eval(t),
            w_lower: self.w_lower.eval(t),
        }
    }
}

impl EnvelopeSample {
    pub fn is_ordered(&self) -> bool {
        ordered(&self.d_lower, &self.d_upper) && ordered(&self.w_lower, &self.w_upper)
    }
}

pub(crate) fn ordered(low: &Vector, high: &Vector) -> bool {
    low.iter().zip(high.iter()).all(|(l, h)| l <= h)
}

/// A plant, its envelopes and one concrete realization to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: LtiSystem,
    pub bounds: UncertaintyBounds,
    pub u: VectorSignal,
    pub d: VectorSignal,
    pub w: VectorSignal,
    pub x0: Vector,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub diagnostics: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(self.diagnostics))
        }
    }
}

/// Dimension, ordering (at t = 0) and finiteness checks. Detectability is left
/// to the decomposition.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut diags = s.system.shape_diagnostics();
    let sys = &s.system;
    let (nx, nd, nw) = (sys.nx(), sys.nd(), sys.nw());
    let b = &s.bounds;
    let mut dim = |what: &str, got: usize, want: usize| {
        if got != want {
            diags.push(format!("dimension: {what} has {got} components, expected {want}"));
        }
    };
    dim("x0_upper", b.x0_upper.len(), nx);
    dim("x0_lower", b.x0_lower.len(), nx);
    dim("x0", s.x0.len(), nx);
    dim("d_upper", b.d_upper.dim(), nd);
    dim("d_lower", b.d_lower.dim(), nd);
    dim("w_upper", b.w_upper.dim(), nw);
    dim("w_lower", b.w_lower.dim(), nw);
    dim("u", s.u.dim(), nx);
    dim("d", s.d.dim(), nd);
    dim("w", s.w.dim(), nw);
    if !diags.is_empty() {
        return ValidationReport { diagnostics: diags };
    }

    for (name, v) in [("x0_upper", &b.x0_upper), ("x0_lower", &b.x0_lower), ("x0", &s.x0)] {
        if v.iter().any(|x| !x.is_finite()) {
            diags.push(format!("finiteness: {name} has a non-finite entry"));
        }
    }
    if !ordered(&b.x0_lower, &b.x0_upper) {
        diags.push("ordering: x0_lower must not exceed x0_upper".into());
    } else if !(ordered(&b.x0_lower, &s.x0) && ordered(&s.x0, &b.x0_upper)) {
        diags.push("ordering: true x0 lies outside [x0_lower, x0_upper]".into());
    }
    let env = b.at(0.0);
    if !ordered(&env.d_lower, &env.d_upper) {
        diags.push("ordering: d_lower exceeds d_upper at t = 0".into());
    }
    if !ordered(&env.w_lower, &env.w_upper) {
        diags.push("ordering: w_lower exceeds w_upper at t = 0".into());
    }
    let (d0, w0) = (s.d.eval(0.0), s.w.eval(0.0));
    if !(ordered(&env.d_lower, &d0) && ordered(&d0, &env.d_upper)) {
        diags.push("ordering: true d outside its envelope at t = 0".into());
    }
    if !(ordered(&env.w_lower, &w0) && ordered(&w0, &env.w_upper)) {
        diags.push("ordering: true w outside its envelope at t = 0".into());
    }
    ValidationReport { diagnostics: diags }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn dt_preset_is_valid() {
        let s = presets::paper_dt().scenario().unwrap();
        let report = validate_scenario(&s);
        assert!(report.is_valid(), "{:?}", report.diagnostics);
    }

    #[test]
    fn unordered_initial_box() {
        let sys = LtiSystem::new(
            TimeDomain::Dt,
            Matrix::from_element(1, 1, 0.5),
            Matrix::zeros(1, 1),
            Matrix::identity(1, 1),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let s = Scenario {
            system: sys,
            bounds: UncertaintyBounds {
                x0_upper: Vector::from_element(1, 0.0),
                x0_lower: Vector::from_element(1, 1.0),
                d_upper: VectorSignal::zeros(1),
                d_lower: VectorSignal::zeros(1),
                w_upper: VectorSignal::zeros(1),
                w_lower: VectorSignal::zeros(1),
            },
            u: VectorSignal::zeros(1),
            d: VectorSignal::zeros(1),
            w: VectorSignal::zeros(1),
            x0: Vector::zeros(1),
        };
        let report = validate_scenario(&s);
        assert!(!report.is_valid());
        assert!(report.diagnostics.iter().any(|d| d.starts_with("ordering")));
    }

    #[test]
    fn wrong_h_width() {
        let err = LtiSystem::new(
            TimeDomain::Dt,
            Matrix::identity(2, 2),
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 3),
            Matrix::zeros(1, 1),
        )
        .unwrap_err();
        match err {
            Error::Validation(d) => assert!(d[0].contains("H has 3 columns")),
            other => panic!("{other:?}"),
        }
    }
}
