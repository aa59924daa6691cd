use clap::Parser;

use slipforge::commands::{run, Cli};
use slipforge::failure::Failure;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            exit_with(Failure::usage(first));
        }
    };
    if let Err(f) = run(cli) {
        exit_with(f);
    }
}

fn exit_with(f: Failure) -> ! {
    eprintln!("{}", f.line());
    std::process::exit(f.exit_code());
}
