use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = polydepth::cli::run(std::env::args_os());
    let text = outcome.report.as_bytes();
    let written = if outcome.exit_code == 0 {
        std::io::stdout().write_all(text)
    } else {
        std::io::stderr().write_all(text)
    };
    if written.is_err() {
        return ExitCode::from(1);
    }
    ExitCode::from(u8::try_from(outcome.exit_code).unwrap_or(1))
}
