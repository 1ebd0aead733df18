use std::process::ExitCode;

use osptba::suite::{criteria, DEFAULT_SEED};

fn main() -> ExitCode {
    let mut failed = 0;
    let all = criteria();
    for c in &all {
        let r = c.run(DEFAULT_SEED);
        println!("{}", r.line());
        if !r.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", all.len() - failed, all.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
