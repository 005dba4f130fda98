use std::process::ExitCode;

use scissors::acceptance::{run_all, SuiteConfig, CRITERIA};

fn main() -> ExitCode {
    let ids: Vec<usize> = CRITERIA.iter().map(|c| c.id).collect();
    let results = run_all(&ids, &SuiteConfig::default());
    for r in &results {
        println!("{}", r.line());
        if !r.checks {
            println!("    {}", r.detail);
        }
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
