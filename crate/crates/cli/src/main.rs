use clap::error::ErrorKind;
use clap::Parser;
use p4ip_cli::exit::{exit_code, SUCCESS, USAGE};
use p4ip_cli::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => SUCCESS,
                _ => USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = p4ip_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}
