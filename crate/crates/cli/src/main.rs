use std::process::ExitCode;

fn main() -> ExitCode {
    rsp_cli::main_with_args(std::env::args_os())
}
