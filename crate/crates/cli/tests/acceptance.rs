//! The full acceptance run: every check at its required size, one
//! PASS/FAIL line each. Run with `--nocapture` to see the lines.

use atlscpref_cli::repro_nash;
use atlscpref_cli::suite::{self, Report};
use std::time::Duration;

const SEED: u64 = 2024;

fn report(r: &Report) -> bool {
    println!("{r}");
    r.passed()
}

#[test]
fn acceptance() {
    let mut ok = true;
    for r in suite::run_all(SEED) {
        ok &= report(&r);
    }
    match repro_nash() {
        Ok(n) => {
            let pass = n.passed() && n.elapsed <= Duration::from_secs(60);
            println!(
                "{} 9. Nash reproduction: {} lines, {} mismatches, {:.2?}",
                if pass { "PASS" } else { "FAIL" },
                n.lines.len(),
                n.lines.iter().filter(|l| !l.ok()).count(),
                n.elapsed
            );
            ok &= pass;
        }
        Err(e) => {
            println!("FAIL 9. Nash reproduction: {e}");
            ok = false;
        }
    }
    assert!(ok, "some acceptance checks failed");
}
