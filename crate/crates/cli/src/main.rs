fn main() {
    std::process::exit(ggmeval_cli::run(std::env::args_os()));
}
