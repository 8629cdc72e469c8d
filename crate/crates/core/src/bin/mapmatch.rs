fn main() {
    std::process::exit(mapmatch::cli::main_with_args(std::env::args_os()));
}
