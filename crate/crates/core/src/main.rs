use std::process::ExitCode;

use distband::cli::{execute, parse_args};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let inv = match parse_args(std::env::args_os()) {
        Ok(inv) => inv,
        Err(e) => e.exit(),
    };
    match execute(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("distband: {e}");
            ExitCode::from(1)
        }
    }
}
