use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use singres::cli::{run, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let report = run(&cli, args[1..].to_vec());
    let text = if cli.json {
        report.to_json() + "\n"
    } else {
        report.to_table()
    };
    // A closed pipe (`| head`) is not an error worth reporting.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    if let (false, Some(e)) = (cli.json, &report.error) {
        eprintln!("error: {e}");
    }
    ExitCode::from(report.exit as u8)
}
