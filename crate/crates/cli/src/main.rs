use clap::error::ErrorKind;
use clap::Parser;
use isac_cli::{run, Cli, ExitStatus};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => ExitStatus::BadScenario.code(),
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(status) => std::process::exit(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.status().code());
        }
    }
}
