fn main() {
    std::process::exit(nwave::cli::main_with_args(std::env::args_os()));
}
