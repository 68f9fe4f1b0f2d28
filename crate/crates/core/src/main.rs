fn main() {
    std::process::exit(coherence_audit::cli::run(std::env::args_os()));
}
