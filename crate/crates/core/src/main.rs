fn main() {
    std::process::exit(majflow::cli::main_with_args(std::env::args_os()));
}
