//! The signal mini-language used in config files: sums of constants and
//! single-frequency sinusoids.
//!
//! `cargo run --example signal_dsl`

use interval_observer::signal::{parse_signal, sample_in_box};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> interval_observer::Result<()> {
    for text in ["0.02*cos(5*t)", "-0.5*cos(1*t)", "1 - 2*sin(3*t + 0.5)"] {
        let s = parse_signal(text)?;
        let samples: Vec<String> = (0..4).map(|t| format!("{:+.4}", s.eval(t as f64))).collect();
        println!("{text:24} -> {:24} |s| <= {:.2}  s(0..4) = {}", s.to_string(), s.amplitude_bound(), samples.join(" "));
    }
    match parse_signal("sin(5*t") {
        Err(e) => println!("syntax errors carry a position: {e}"),
        Ok(_) => unreachable!(),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let draws: Vec<String> = (0..5)
        .map(|_| sample_in_box(-0.02, 0.02, &mut rng).map(|v| format!("{v:+.5}")))
        .collect::<Result<_, _>>()?;
    println!("draws in [-0.02, 0.02]: {}", draws.join(" "));
    Ok(())
}
