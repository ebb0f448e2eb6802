//! Built-in scenarios.
//!
//! `paper-dt` is the 4-state discrete-time example with the gains
//! `A_o = diag(0.1, 0.2, 0.3)`, `B_o = (1, 1, 1)`. `paper-ct` is a 2-state
//! continuous-time desk example (`F = [[-1, 0], [1, -2]]`, `H = (1, 0)`).

use crate::config::{BoundsConfig, DesignConfig, ScenarioConfig, SignalsConfig};
use crate::error::{Error, Result};
use crate::model::TimeDomain;

pub const PRESET_NAMES: [&str; 2] = ["paper-dt", "paper-ct"];

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn paper_dt() -> ScenarioConfig {
    ScenarioConfig {
        domain: TimeDomain::Dt,
        f: vec![
            vec![-1.0, 0.0, 1.0, 0.0],
            vec![1.0, -0.5, -1.0, 1.0],
            vec![0.0, 0.0, 0.0, -1.0],
            vec![0.0, 0.0, -1.0, 0.0],
        ],
        d: vec![vec![1.0], vec![0.0], vec![0.0], vec![0.0]],
        h: vec![vec![1.0, 0.0, 1.0, 1.0]],
        w: vec![vec![1.0]],
        bounds: BoundsConfig {
            x0_upper: vec![1.0; 4],
            x0_lower: vec![-1.0; 4],
            d_upper: strings(&["0.02"]),
            d_lower: strings(&["-0.02"]),
            w_upper: strings(&["0.01"]),
            w_lower: strings(&["-0.01"]),
        },
        signals: SignalsConfig {
            u: strings(&["sin(1*t)", "0", "-0.5*cos(1*t)", "0"]),
            d: strings(&["0.02*cos(5*t)"]),
            w: strings(&["0.01*sin(20*t)"]),
        },
        x0: vec![0.0; 4],
        design: DesignConfig {
            a_o: Some(vec![vec![0.1, 0.0, 0.0], vec![0.0, 0.2, 0.0], vec![0.0, 0.0, 0.3]]),
            b_o: Some(vec![vec![1.0], vec![1.0], vec![1.0]]),
            ..Default::default()
        },
    }
}

/// `A_o = -3` keeps the observable gain away from `F_o = -1`; the default
/// `-1` would sit right on top of it.
pub fn paper_ct() -> ScenarioConfig {
    ScenarioConfig {
        domain: TimeDomain::Ct,
        f: vec![vec![-1.0, 0.0], vec![1.0, -2.0]],
        d: vec![vec![1.0], vec![0.5]],
        h: vec![vec![1.0, 0.0]],
        w: vec![vec![1.0]],
        bounds: BoundsConfig {
            x0_upper: vec![1.0; 2],
            x0_lower: vec![-1.0; 2],
            d_upper: strings(&["0.02"]),
            d_lower: strings(&["-0.02"]),
            w_upper: strings(&["0.01"]),
            w_lower: strings(&["-0.01"]),
        },
        signals: SignalsConfig {
            u: strings(&["sin(1*t)", "0"]),
            d: strings(&["0.02*cos(5*t)"]),
            w: strings(&["0.01*sin(20*t)"]),
        },
        x0: vec![0.5, -0.25],
        design: DesignConfig {
            a_o: Some(vec![vec![-3.0]]),
            b_o: Some(vec![vec![1.0]]),
            ..Default::default()
        },
    }
}

pub fn by_name(name: &str) -> Result<ScenarioConfig> {
    match name {
        "paper-dt" => Ok(paper_dt()),
        "paper-ct" => Ok(paper_ct()),
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}
