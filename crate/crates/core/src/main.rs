fn main() {
    std::process::exit(swarmcell::cli::main_with_args(std::env::args_os()));
}
