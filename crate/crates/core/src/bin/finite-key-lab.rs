fn main() {
    std::process::exit(finite_key_lab::cli::main_with_args(std::env::args_os()));
}
