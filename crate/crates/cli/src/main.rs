mod args;
mod commands;
mod inputs;

use args::Cli;
use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;
use std::process::ExitCode;

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    if let Some(w) = cli.common.workers {
        if w == 0 {
            return fail("invalid_input", "--workers must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
        {
            return fail("invalid_input", &e.to_string());
        }
    }
    let result = commands::run(&cli.command, &cli.common).and_then(|outcome| {
        Ok((
            commands::commit(&cli.common.out, &outcome, cli.common.force)?,
            outcome.passed,
        ))
    });
    match result {
        Ok((paths, passed)) => {
            let files: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
            println!("{}", json!({ "passed": passed, "files": files }));
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
