//! `ivobs` command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ScenarioConfig;
use crate::design::DesignBundle;
use crate::error::{Error, Result};
use crate::model::{Scenario, TimeDomain};
use crate::presets;
use crate::signal::sample_vector_in_box;
use crate::sim::{self, Horizon, ObserverForm, SampledSignals, SimulationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DESIGN: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Max disagreement tolerated between cascade and direct bounds in `verify`.
pub const EQUIVALENCE_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "ivobs", version, about = "Interval observers for detectable LTI systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormArg {
    Cascade,
    Direct,
}

impl From<FormArg> for ObserverForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Cascade => ObserverForm::Cascade,
            FormArg::Direct => ObserverForm::Direct,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Offline design; writes the design document (JSON).
    Design {
        /// Config file, or a preset name (paper-dt, paper-ct).
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plant + observer run; writes the trajectory CSV and prints a containment report.
    Simulate {
        config: String,
        #[arg(long, conflicts_with = "tfinal")]
        steps: Option<usize>,
        #[arg(long)]
        tfinal: Option<f64>,
        /// CT integration step.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value = "cascade")]
        form: FormArg,
        /// Draw x0, d, w inside their envelopes from this seed instead of using the
        /// config's own signals.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificates, Monte Carlo containment and cascade/direct equivalence.
    Verify {
        config: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print (or write) a built-in scenario config.
    Example {
        #[arg(value_parser = presets::PRESET_NAMES)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::DimensionMismatch(_)
        | Error::NotSquare { .. }
        | Error::NonFinite(_)
        | Error::UnorderedBounds(_)
        | Error::Syntax { .. }
        | Error::Validation(_)
        | Error::Config(_)
        | Error::Io(_) => EXIT_VALIDATION,
        Error::SpectraOverlap(_)
        | Error::NearSingular { .. }
        | Error::EigenFailure
        | Error::ZeroObservableRank
        | Error::NotDetectable(_)
        | Error::NearSingularT { .. }
        | Error::NearDefective { .. }
        | Error::NotStable
        | Error::InvalidGains(_) => EXIT_DESIGN,
        Error::Divergence(_) | Error::EnvelopeViolation { .. } => EXIT_VERIFICATION,
    }
}

/// A path if it exists, otherwise a preset name.
pub fn load_config(arg: &str) -> Result<ScenarioConfig> {
    if Path::new(arg).exists() {
        ScenarioConfig::load(arg)
    } else if presets::PRESET_NAMES.contains(&arg) {
        presets::by_name(arg)
    } else {
        Err(Error::Io(format!("{arg}: no such file or preset")))
    }
}

fn prepare(arg: &str) -> std::result::Result<(Scenario, DesignBundle), i32> {
    let fail = |e: Error| {
        eprintln!("error: {e}");
        exit_code(&e)
    };
    let cfg = load_config(arg).map_err(fail)?;
    let scenario = cfg.scenario().map_err(fail)?;
    let opts = cfg.design_options().map_err(fail)?;
    let bundle = DesignBundle::build(&scenario.system, &opts).map_err(fail)?;
    Ok((scenario, bundle))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Design { config, out } => cmd_design(&config, out.as_deref()),
        Command::Simulate {
            config,
            steps,
            tfinal,
            dt,
            form,
            seed,
            out,
        } => cmd_simulate(&config, steps, tfinal, dt, form.into(), seed, out.as_deref()),
        Command::Verify { config, trials, seed } => cmd_verify(&config, trials, seed),
        Command::Example { name, out } => cmd_example(&name, out.as_deref()),
    }
}

fn report_io(r: Result<()>) -> i32 {
    match r {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn cmd_design(config: &str, out: Option<&Path>) -> i32 {
    let (_, bundle) = match prepare(config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let doc = bundle.to_document();
    let text = serde_json::to_string_pretty(&doc).expect("design document serializes");
    let code = report_io(open_out(out).and_then(|mut w| {
        writeln!(w, "{text}")?;
        w.flush()?;
        Ok(())
    }));
    if code != EXIT_OK {
        return code;
    }
    let c = &doc.certificates;
    eprintln!(
        "n_o = {}, n_no = {}, sylvester residual {:.3e}, rcond(T) {:.3e}, sigma {:.3e}",
        doc.n_o, doc.n_no, c.sylvester_relative_residual, c.t_rcond, doc.sigma
    );
    if c.all_passed {
        EXIT_OK
    } else {
        eprintln!(
            "certificates failed: decomposition {}, sylvester {}, cooperative {}",
            c.decomposition.passed(),
            c.sylvester_ok,
            c.cooperative_ok
        );
        EXIT_DESIGN
    }
}

fn horizon(domain: TimeDomain, steps: Option<usize>, tfinal: Option<f64>) -> Horizon {
    match (steps, tfinal) {
        (Some(n), _) => Horizon::Steps(n),
        (None, Some(t)) => Horizon::FinalTime(t),
        (None, None) => match domain {
            TimeDomain::Dt => Horizon::Steps(300),
            TimeDomain::Ct => Horizon::FinalTime(10.0),
        },
    }
}

pub fn cmd_simulate(
    config: &str,
    steps: Option<usize>,
    tfinal: Option<f64>,
    dt: Option<f64>,
    form: ObserverForm,
    seed: Option<u64>,
    out: Option<&Path>,
) -> i32 {
    let (scenario, bundle) = match prepare(config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let domain = scenario.system.domain;
    let mut cfg = SimulationConfig {
        horizon: horizon(domain, steps, tfinal),
        seed: seed.unwrap_or(0),
        ..Default::default()
    };
    if let Some(h) = dt {
        cfg.ct_step = h;
    }
    let result = match seed {
        None => sim::run_pipeline(&scenario, &bundle, &cfg, form),
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let b = &scenario.bounds;
            sample_vector_in_box(&b.x0_lower, &b.x0_upper, &mut rng).and_then(|x0| {
                let exo = SampledSignals::draw(&scenario.u, b, cfg.steps(domain), &mut rng)?;
                sim::run_realization(&scenario, &bundle, &cfg, form, &exo, &x0)
            })
        }
    };
    let (traj, report) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let code = report_io(open_out(out).and_then(|mut w| {
        traj.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }));
    if code != EXIT_OK {
        return code;
    }
    // Keep stdout clean for the CSV when no --out is given.
    if out.is_some() {
        println!("{}", report.summary());
    } else {
        eprintln!("{}", report.summary());
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    }
}

pub fn cmd_verify(config: &str, trials: usize, seed: u64) -> i32 {
    let (scenario, bundle) = match prepare(config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let domain = scenario.system.domain;
    let cfg = SimulationConfig {
        horizon: match domain {
            TimeDomain::Dt => Horizon::Steps(200),
            TimeDomain::Ct => Horizon::FinalTime(10.0),
        },
        seed,
        trials,
        ..Default::default()
    };
    let mut ok = true;

    let certs = bundle.to_document().certificates;
    println!(
        "certificates: {} (decomposition {}, sylvester {}, cooperative {})",
        pass(certs.all_passed),
        certs.decomposition.passed(),
        certs.sylvester_ok,
        certs.cooperative_ok
    );
    ok &= certs.all_passed;

    match sim::monte_carlo(&scenario, &bundle, &cfg, ObserverForm::Cascade) {
        Ok(r) => {
            println!("monte carlo: {}\n{}", pass(r.passed()), r.summary());
            ok &= r.passed();
        }
        Err(e) => {
            println!("monte carlo: FAIL ({e})");
            ok = false;
        }
    }

    let nominal = SimulationConfig { trials: 1, ..cfg };
    let runs = sim::run_pipeline(&scenario, &bundle, &nominal, ObserverForm::Cascade).and_then(|c| {
        sim::run_pipeline(&scenario, &bundle, &nominal, ObserverForm::Direct).map(|d| (c, d))
    });
    match runs {
        Ok(((c, _), (d, _))) => {
            let gap = c
                .upper
                .iter()
                .zip(&d.upper)
                .chain(c.lower.iter().zip(&d.lower))
                .map(|(a, b)| (a - b).amax())
                .fold(0.0, f64::max);
            let same = gap <= EQUIVALENCE_TOL;
            println!("cascade/direct equivalence: {} (max gap {gap:.3e})", pass(same));
            ok &= same;
        }
        Err(e) => {
            println!("cascade/direct equivalence: FAIL ({e})");
            ok = false;
        }
    }

    if ok {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_example(name: &str, out: Option<&Path>) -> i32 {
    let cfg = match presets::by_name(name) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    report_io(match out {
        Some(p) => cfg.save(p),
        None => {
            println!("{}", cfg.to_json());
            Ok(())
        }
    })
}
