use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use nidb::{configure_threads, run, Cli, Io};

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let stdin = io::stdin();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut err = stderr.lock();
    let mut input = stdin.lock();
    let code = run(
        cli,
        &mut Io {
            stdout: &mut out,
            stderr: &mut err,
            stdin: &mut input,
        },
    );
    let _ = out.flush();
    ExitCode::from(code as u8)
}
