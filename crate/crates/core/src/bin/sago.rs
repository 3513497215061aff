fn main() {
    std::process::exit(sago::cli::run(std::env::args_os()));
}
