use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use serrematch::cache::Cache;
use serrematch::{dispatch, envelope, resolve_cache_dir, Cli, Store, UsageError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let cache = match resolve_cache_dir(cli.cache_dir).map(Cache::open).transpose() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("warning: running without a cache: {e:#}");
            None
        }
    };
    let store = Store::new(cache, !cli.json);
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(cli.command, &store) {
        Ok(outcome) => {
            let doc = envelope(&args, &outcome);
            let text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{text}").and_then(|_| out.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("error: writing report: {e}");
                    return ExitCode::from(1);
                }
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
