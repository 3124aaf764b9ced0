use clap::Parser;

fn main() {
    let cli = probecheck::Cli::parse();
    let code = probecheck::main_with(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
