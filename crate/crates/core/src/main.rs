use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fwsvm::cli::run(std::env::args_os()))
}
