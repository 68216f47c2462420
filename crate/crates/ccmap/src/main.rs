fn main() {
    std::process::exit(ccmap::cli::main_with_args(std::env::args_os()));
}
