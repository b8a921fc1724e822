fn main() {
    std::process::exit(nacelle_tmd::cli::run(std::env::args_os()));
}
