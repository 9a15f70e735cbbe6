fn main() {
    std::process::exit(complexity_trap::cli::main_with_args(std::env::args_os()));
}
