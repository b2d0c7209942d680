use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(nlevel::cli::main_with_args(std::env::args_os()))
}
