fn main() {
    std::process::exit(mixmkl_cli::run(std::env::args_os()));
}
