//! A scenario written as JSON: design, simulate, check containment.
//!
//! `cargo run --example custom_scenario`

use interval_observer::sim::{run_pipeline, Horizon, ObserverForm, SimulationConfig};
use interval_observer::{DesignBundle, ScenarioConfig};

// Three states, one measured; the third state is unobservable with an
// oscillating but stable mode pair.
const CONFIG: &str = r#"{
  "domain": "dt",
  "F": [[0.5, 0.0, 0.0], [0.2, -0.3, 0.6], [0.1, -0.6, -0.3]],
  "D": [[1.0], [0.0], [0.5]],
  "H": [[1.0, 0.0, 0.0]],
  "W": [[1.0]],
  "bounds": {
    "x0_upper": [2.0, 2.0, 2.0],
    "x0_lower": [-2.0, -2.0, -2.0],
    "d_upper": ["0.1"],
    "d_lower": ["-0.1"],
    "w_upper": ["0.05"],
    "w_lower": ["-0.05"]
  },
  "signals": {
    "u": ["sin(0.3*t)", "0", "0"],
    "d": ["0.1*cos(2*t)"],
    "w": ["0.05*sin(7*t)"]
  },
  "x0": [1.0, -1.0, 0.5]
}"#;

fn main() -> interval_observer::Result<()> {
    let cfg = ScenarioConfig::from_json(CONFIG)?;
    let scenario = cfg.scenario()?;
    let bundle = DesignBundle::build(&scenario.system, &cfg.design_options()?)?;
    println!(
        "n_o = {}, blocks {:?}, default A_o diag {:?}",
        bundle.dec.n_o,
        bundle.jt.blocks,
        bundle.design.a_o.diagonal().as_slice()
    );
    let run = SimulationConfig {
        horizon: Horizon::Steps(100),
        ..Default::default()
    };
    let (_, report) = run_pipeline(&scenario, &bundle, &run, ObserverForm::Direct)?;
    println!("{}", report.summary());
    Ok(())
}
