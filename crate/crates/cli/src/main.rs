use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = qcomb_cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr();
    if let Err(err) = qcomb_cli::run(&cli, &mut stdout, &mut stderr) {
        eprintln!("error: {err:#}");
        std::process::exit(qcomb_cli::exit_code(&err));
    }
}
