fn main() {
    std::process::exit(distillery::cli::run(std::env::args_os()));
}
