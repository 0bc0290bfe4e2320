use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = voe_cli::Cli::parse();
    match voe_cli::run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("voe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
