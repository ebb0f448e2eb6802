//! Cascade observer (z_o, then z_no, then recombination) against the
//! single-state direct form, on the 4-state example.
//!
//! `cargo run --example cascade_vs_direct`

use interval_observer::sim::{run_pipeline, Horizon, ObserverForm, SimulationConfig};
use interval_observer::{presets, DesignBundle};

fn main() -> interval_observer::Result<()> {
    let cfg = presets::paper_dt();
    let scenario = cfg.scenario()?;
    let bundle = DesignBundle::build(&scenario.system, &cfg.design_options()?)?;
    let run = SimulationConfig {
        horizon: Horizon::Steps(300),
        ..Default::default()
    };
    let (c, rc) = run_pipeline(&scenario, &bundle, &run, ObserverForm::Cascade)?;
    let (d, rd) = run_pipeline(&scenario, &bundle, &run, ObserverForm::Direct)?;
    println!("violations: cascade {}, direct {}", rc.violations, rd.violations);

    let mut gap: f64 = 0.0;
    for k in 0..c.times.len() {
        gap = gap.max((&c.upper[k] - &d.upper[k]).amax()).max((&c.lower[k] - &d.lower[k]).amax());
    }
    println!("max |cascade - direct| over {} steps: {gap:.2e}", c.times.len());

    println!("  t      x_1     [lower_1, upper_1]");
    for k in (0..=300).step_by(50) {
        println!("{:4} {:8.4} [{:9.3}, {:9.3}]", c.times[k], c.x[k][0], c.lower[k][0], c.upper[k][0]);
    }
    Ok(())
}
