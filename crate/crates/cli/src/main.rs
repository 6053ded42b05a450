use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use gravcorr_cli::args::Cli;
use gravcorr_cli::error::CliError;

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.render().to_string().trim().to_string())),
    };
    match gravcorr_cli::run(&cli, argv) {
        Ok(out) => {
            if cli.out.is_none() {
                let mut stdout = std::io::stdout().lock();
                if stdout.write_all(out.text.as_bytes()).is_err() {
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
