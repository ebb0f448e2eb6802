//! One line per acceptance criterion; nonzero exit if any fails.

mod common;

use std::time::Instant;

fn main() {
    let start = Instant::now();
    let mut failed = 0;
    for (name, check) in common::CRITERIA {
        let out = check();
        if !out.pass {
            failed += 1;
        }
        println!("[{}] {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        common::CRITERIA.len() - failed,
        common::CRITERIA.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
