use clap::Parser;

fn main() {
    let args = mfjump::cli::Args::parse();
    std::process::exit(mfjump::cli::main_with(args));
}
