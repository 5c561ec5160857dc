fn main() {
    std::process::exit(dpp_linstat::cli::main_with_args(std::env::args_os()));
}
