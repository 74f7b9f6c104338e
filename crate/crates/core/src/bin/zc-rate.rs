fn main() {
    std::process::exit(zc_rate::cli::main_with_args(std::env::args_os()));
}
