fn main() {
    std::process::exit(privlens::cli::main_with(std::env::args_os()));
}
