use std::process::ExitCode;

fn main() -> ExitCode {
    dyson_spin::cli::run()
}
