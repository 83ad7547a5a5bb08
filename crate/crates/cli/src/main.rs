use clap::Parser;

/// Exit status for invalid configurations and runtime errors.
const EXIT_ERROR: i32 = 2;

fn main() {
    let cli = avd_cli::args::Cli::parse();
    let code = match avd_cli::args::execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}
