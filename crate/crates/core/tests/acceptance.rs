use stokeswb::acceptance::{run, Params};

fn main() {
    let env = |k: &str| std::env::var(k).ok();
    let seed = env("STOKES_WB_SEED").and_then(|s| s.parse().ok()).unwrap_or(0);
    let lambda = env("STOKES_WB_LAMBDA").and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let p = Params { seed, lambda, ..Default::default() };
    let results = run(&p, |_| true);
    for r in &results {
        println!(
            "[{}] criterion {:>2} {:<22} {:>7.2}s / {:>3.0}s  {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.seconds,
            r.budget_seconds,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
