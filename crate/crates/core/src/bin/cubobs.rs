fn main() {
    std::process::exit(cubobs::cli::main_with_args(std::env::args_os()));
}
