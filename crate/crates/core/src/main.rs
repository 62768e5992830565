fn main() {
    std::process::exit(pdsvrp::cli::run(std::env::args_os()));
}
