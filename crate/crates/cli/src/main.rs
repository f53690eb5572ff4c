use clap::Parser;

fn main() {
    let cli = scbench_cli::Cli::parse();
    if let Err(err) = scbench_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
