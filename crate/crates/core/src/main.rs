fn main() {
    std::process::exit(fockbench::cli::run(std::env::args_os()));
}
