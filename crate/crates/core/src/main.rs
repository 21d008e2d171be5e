use std::process::ExitCode;

use plume_swarm::cli::run_cli;
use plume_swarm::parallel::configure_threads;

fn main() -> ExitCode {
    let threads = match std::env::var("SIM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => n,
            Err(_) => {
                eprintln!("error: SIM_THREADS must be a non-negative integer, got `{v}`");
                return ExitCode::from(2);
            }
        },
        Err(_) => 0,
    };
    configure_threads(threads);
    match run_cli(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return ExitCode::from(if clap_err.use_stderr() { 2 } else { 0 });
            }
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
