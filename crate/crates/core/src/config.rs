//! JSON scenario documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decomp::BasisStrategy;
use crate::design::DesignOptions;
use crate::error::{Error, Result};
use crate::jordan::DEFAULT_COND_MAX;
use crate::linalg::{from_rows, Vector, DEFAULT_RANK_TOL};
use crate::model::{validate_scenario, LtiSystem, Scenario, TimeDomain, UncertaintyBounds};
use crate::signal::VectorSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub x0_upper: Vec<f64>,
    pub x0_lower: Vec<f64>,
    pub d_upper: Vec<String>,
    pub d_lower: Vec<String>,
    pub w_upper: Vec<String>,
    pub w_lower: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalsConfig {
    pub u: Vec<String>,
    pub d: Vec<String>,
    pub w: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rank: f64,
    pub cond_max: f64,
    pub certificate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: DEFAULT_RANK_TOL,
            cond_max: DEFAULT_COND_MAX,
            certificate: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    #[serde(rename = "A_o", skip_serializing_if = "Option::is_none")]
    pub a_o: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B_o", skip_serializing_if = "Option::is_none")]
    pub b_o: Option<Vec<Vec<f64>>>,
    pub basis: BasisStrategy,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Test hook: relative corruption of `T[0,0]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_perturbation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: TimeDomain,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub bounds: BoundsConfig,
    pub signals: SignalsConfig,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub design: DesignConfig,
}

fn matrix(name: &str, rows: &[Vec<f64>], diags: &mut Vec<String>) -> Option<crate::linalg::Matrix> {
    match from_rows(rows) {
        Ok(m) => Some(m),
        Err(e) => {
            diags.push(format!("{name}: {e}"));
            None
        }
    }
}

fn signals(name: &str, texts: &[String], diags: &mut Vec<String>) -> Option<VectorSignal> {
    match VectorSignal::parse(texts) {
        Ok(v) => Some(v),
        Err(e) => {
            diags.push(format!("{name}: {e}"));
            None
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    /// Builds and validates the scenario; every problem found is reported at once.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut diags = Vec::new();
        let f = matrix("F", &self.f, &mut diags);
        let d = matrix("D", &self.d, &mut diags);
        let h = matrix("H", &self.h, &mut diags);
        let w = matrix("W", &self.w, &mut diags);
        let b = &self.bounds;
        let d_upper = signals("bounds.d_upper", &b.d_upper, &mut diags);
        let d_lower = signals("bounds.d_lower", &b.d_lower, &mut diags);
        let w_upper = signals("bounds.w_upper", &b.w_upper, &mut diags);
        let w_lower = signals("bounds.w_lower", &b.w_lower, &mut diags);
        let u = signals("signals.u", &self.signals.u, &mut diags);
        let ds = signals("signals.d", &self.signals.d, &mut diags);
        let ws = signals("signals.w", &self.signals.w, &mut diags);
        if !diags.is_empty() {
            return Err(Error::Validation(diags));
        }
        let system = LtiSystem::new(self.domain, f.unwrap(), d.unwrap(), h.unwrap(), w.unwrap())?;
        let scenario = Scenario {
            system,
            bounds: UncertaintyBounds {
                x0_upper: Vector::from_vec(b.x0_upper.clone()),
                x0_lower: Vector::from_vec(b.x0_lower.clone()),
                d_upper: d_upper.unwrap(),
                d_lower: d_lower.unwrap(),
                w_upper: w_upper.unwrap(),
                w_lower: w_lower.unwrap(),
            },
            u: u.unwrap(),
            d: ds.unwrap(),
            w: ws.unwrap(),
            x0: Vector::from_vec(self.x0.clone()),
        };
        validate_scenario(&scenario).into_result()?;
        Ok(scenario)
    }

    pub fn design_options(&self) -> Result<DesignOptions> {
        let ds = &self.design;
        let a_o = ds.a_o.as_deref().map(from_rows).transpose()?;
        let b_o = ds.b_o.as_deref().map(from_rows).transpose()?;
        let tol = &ds.tolerances;
        for (name, v) in [("rank", tol.rank), ("cond_max", tol.cond_max), ("certificate", tol.certificate)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("tolerances.{name} must be positive and finite")));
            }
        }
        Ok(DesignOptions {
            rank_tol: tol.rank,
            strategy: ds.basis,
            a_o,
            b_o,
            seed: ds.seed,
            cond_max: tol.cond_max,
            certificate_tol: tol.certificate,
            t_perturbation: ds.t_perturbation,
        })
    }

    /// Sets every envelope and the true `d`, `w` to zero.
    pub fn without_uncertainty(mut self) -> Self {
        let zeros = |v: &[String]| vec!["0".to_string(); v.len()];
        let b = &mut self.bounds;
        b.d_upper = zeros(&b.d_upper);
        b.d_lower = zeros(&b.d_lower);
        b.w_upper = zeros(&b.w_upper);
        b.w_lower = zeros(&b.w_lower);
        self.signals.d = zeros(&self.signals.d);
        self.signals.w = zeros(&self.signals.w);
        self
    }
}
