use std::process::ExitCode;

fn main() -> ExitCode {
    countfact::cli::run()
}
