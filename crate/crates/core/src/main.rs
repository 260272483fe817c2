fn main() {
    std::process::exit(metroball::cli::run(std::env::args_os()));
}
