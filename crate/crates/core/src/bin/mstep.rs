use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = catch_unwind(AssertUnwindSafe(|| {
        let mut out = stdout.lock();
        let mut err = stderr.lock();
        let code = mstep::cli::run(std::env::args_os(), &mut out, &mut err);
        let _ = out.flush();
        code
    }))
    .unwrap_or(mstep::cli::EXIT_NUMERIC);
    std::process::exit(code);
}
