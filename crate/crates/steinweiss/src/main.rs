use clap::Parser;
use steinweiss::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let (report, code) = run(cli);
    if let Some(report) = report {
        match serde_json::to_string_pretty(&report) {
            Ok(json) => println!("{json}"),
            Err(e) => {
                eprintln!("error: failed to serialize report: {e}");
                std::process::exit(2);
            }
        }
    }
    std::process::exit(code);
}
