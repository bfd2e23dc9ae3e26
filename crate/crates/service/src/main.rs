use std::process::ExitCode;

fn main() -> ExitCode {
    gesturechat_service::cli::run(std::env::args_os())
}
