//! Containment campaign: random x0 in the initial box and random d, w inside
//! their envelopes, one RNG stream per trial.
//!
//! `cargo run --release --example monte_carlo -- [trials] [seed]`

use interval_observer::sim::{monte_carlo, Horizon, ObserverForm, SimulationConfig};
use interval_observer::{presets, DesignBundle};

fn main() -> interval_observer::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);

    let cfg = presets::paper_dt();
    let scenario = cfg.scenario()?;
    let bundle = DesignBundle::build(&scenario.system, &cfg.design_options()?)?;
    let run = SimulationConfig {
        horizon: Horizon::Steps(200),
        trials,
        seed,
        ..Default::default()
    };
    for form in [ObserverForm::Cascade, ObserverForm::Direct] {
        let report = monte_carlo(&scenario, &bundle, &run, form)?;
        println!("== {form:?}\n{}\n", report.summary());
    }
    Ok(())
}
