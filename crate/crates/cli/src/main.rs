fn main() {
    std::process::exit(resloss_cli::run(std::env::args_os()));
}
