fn main() {
    std::process::exit(necklace_cli::run(std::env::args_os()));
}
