fn main() {
    std::process::exit(sdfabs::cli::run(std::env::args_os()));
}
