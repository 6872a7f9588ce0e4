fn main() {
    std::process::exit(countfix::cli::main_with_args(std::env::args_os()));
}
