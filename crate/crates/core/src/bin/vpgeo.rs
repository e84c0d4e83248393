fn main() {
    let outcome = vpgeo::cli::run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(outcome.exit_code);
}
