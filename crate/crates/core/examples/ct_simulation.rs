//! Continuous-time desk example integrated with RK4; writes the trajectory CSV.
//!
//! `cargo run --example ct_simulation -- out.csv`

use std::fs::File;
use std::io::BufWriter;

use interval_observer::sim::{run_pipeline, Horizon, ObserverForm, SimulationConfig};
use interval_observer::{presets, DesignBundle};

fn main() -> interval_observer::Result<()> {
    let cfg = presets::paper_ct();
    let scenario = cfg.scenario()?;
    let bundle = DesignBundle::build(&scenario.system, &cfg.design_options()?)?;
    println!("n_o = {}, F_no = {}, Lambda = {}", bundle.dec.n_o, bundle.dec.f_no[(0, 0)], bundle.jt.lambda[(0, 0)]);

    let run = SimulationConfig {
        horizon: Horizon::FinalTime(10.0),
        ct_step: 1e-3,
        record_stride: 100,
        ..Default::default()
    };
    let (traj, report) = run_pipeline(&scenario, &bundle, &run, ObserverForm::Cascade)?;
    println!("{}", report.summary());
    if let Some(path) = std::env::args().nth(1) {
        traj.write_csv(BufWriter::new(File::create(&path)?))?;
        println!("wrote {} rows to {path}", traj.times.len());
    }
    Ok(())
}
