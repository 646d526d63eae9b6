fn main() {
    std::process::exit(alias_qa::cli::run(std::env::args_os()));
}
