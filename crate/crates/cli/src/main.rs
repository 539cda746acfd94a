fn main() {
    std::process::exit(finfree_cli::run(std::env::args_os()));
}
