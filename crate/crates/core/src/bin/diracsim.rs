fn main() {
    std::process::exit(diracsim::cli::main_with_args(std::env::args_os()));
}
