fn main() {
    std::process::exit(parkq::cli::main_with_args(std::env::args_os()));
}
