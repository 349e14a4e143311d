use std::process::ExitCode;

fn main() -> ExitCode {
    subjprice_core::cli::main_with(std::env::args_os())
}
