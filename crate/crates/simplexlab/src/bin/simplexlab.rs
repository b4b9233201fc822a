fn main() {
    std::process::exit(simplexlab::cli::main_with_args(std::env::args_os()));
}
