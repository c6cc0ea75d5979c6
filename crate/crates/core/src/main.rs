fn main() {
    std::process::exit(ncc_ipw::cli::main_with_args(std::env::args_os()));
}
