use clap::Parser;
use heartrisk_cli::{run, Cli, CliError, ErrorCode};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            let err = CliError::new(ErrorCode::Config, first);
            eprintln!("{err}");
            std::process::exit(err.code.exit_code());
        }
    };
    let stdout = std::io::stdout();
    if let Err(err) = run(cli, &mut stdout.lock()) {
        eprintln!("{err}");
        std::process::exit(err.code.exit_code());
    }
}
