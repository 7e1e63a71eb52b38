use clap::Parser;
use hydrec_cli::args::Cli;

fn main() {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let _ = e.print();
        // Usage errors fall under "all other errors"; status 2 is reserved.
        std::process::exit(if e.use_stderr() { 1 } else { 0 });
    });
    let result = hydrec_cli::configure_threads().and_then(|_| hydrec_cli::commands::run(&cli.command));
    match result {
        Ok(summary) => print!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
