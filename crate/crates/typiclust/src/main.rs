use clap::Parser;
use typiclust::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        let payload = serde_json::json!({
            "error": error.code(),
            "message": error.to_string(),
        });
        eprintln!("{payload}");
        std::process::exit(error.exit_code());
    }
}
