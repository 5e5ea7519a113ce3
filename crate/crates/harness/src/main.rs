use clap::Parser;

fn main() {
    let cli = ptrnet_ea::cli::Cli::parse();
    if let Err(err) = ptrnet_ea::cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
