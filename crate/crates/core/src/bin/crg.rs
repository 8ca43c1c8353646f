use clap::Parser;

use crg::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let output = match execute(&cli) {
        Ok(output) => output,
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    };
    match cli.command.out_path() {
        Some(path) => {
            if let Err(err) = std::fs::write(path, &output) {
                eprintln!("error: cannot write {}: {err}", path.display());
                std::process::exit(1);
            }
        }
        None => print!("{output}"),
    }
}
