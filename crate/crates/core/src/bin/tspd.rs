fn main() {
    std::process::exit(tspd::cli::main_with_args(std::env::args_os()));
}
