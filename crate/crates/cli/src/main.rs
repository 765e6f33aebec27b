use std::process::ExitCode;

use dipole_switch_cli::{parse_args, run, Verbosity};

fn main() -> ExitCode {
    let invocation = match parse_args(std::env::args_os()) {
        Ok(inv) => inv,
        Err(e) => {
            // Help text goes to stdout, usage errors to stderr.
            if e.exit_code() == 0 {
                print!("{e}");
            } else {
                eprint!("{e}");
                if !e.to_string().ends_with('\n') {
                    eprintln!();
                }
            }
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match invocation.verbosity {
        Verbosity::Quiet => log::LevelFilter::Error,
        Verbosity::Normal => log::LevelFilter::Info,
        Verbosity::Debug => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();
    ExitCode::from(run(&invocation) as u8)
}
