fn main() {
    std::process::exit(skillmine::cli::run(std::env::args_os()));
}
