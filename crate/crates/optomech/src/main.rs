use clap::Parser;

use optomech::cli::Cli;

fn main() {
    let cli = Cli::parse();
    match optomech::run::run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
