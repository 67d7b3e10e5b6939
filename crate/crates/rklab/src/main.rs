fn main() {
    std::process::exit(rklab::cli::main_with(std::env::args_os()));
}
