use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use mccs::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> anyhow::Result<bool> {
        let mut out: Box<dyn Write> = match &cli.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        let ok = run(&cli, &mut out)?;
        out.flush()?;
        Ok(ok)
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
