fn main() {
    std::process::exit(synthlidar::cli::run(std::env::args_os()));
}
