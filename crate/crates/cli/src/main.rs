fn main() {
    std::process::exit(pmesim_cli::main_with_args(std::env::args_os()));
}
