//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use mtlab::suite::run_suite;

const SEED: u64 = 20240601;

fn main() {
    let (report, times) = run_suite(SEED, |c, s, dt| {
        let in_time = dt <= c.limit;
        let pass = s.verdict != mtlab::report::Verdict::Fail && in_time;
        let mut line = format!(
            "{} criterion {:>2} {:<28} {:>7.2}s / {}s",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            dt.as_secs_f64(),
            c.limit.as_secs()
        );
        if let Some(f) = s.first_failure() {
            line.push_str(&format!("  [{}: value {}, tolerance {}]", f.name, f.value, f.tolerance));
        } else if !in_time {
            line.push_str("  [over time budget]");
        }
        println!("{line}");
    });
    let late = mtlab::suite::CRITERIA.iter().zip(&times).filter(|(c, t)| **t > c.limit).count();
    let failed = report.sections.iter().filter(|s| s.verdict == mtlab::report::Verdict::Fail).count();
    println!("{} of 11 criteria passed", 11 - failed.max(late).min(11));
    if failed > 0 || late > 0 {
        std::process::exit(1);
    }
}
