fn main() {
    std::process::exit(supeuclid::cli::main_with_args(std::env::args_os()));
}
