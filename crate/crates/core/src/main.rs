fn main() {
    std::process::exit(qdec::cli::run_from_env());
}
