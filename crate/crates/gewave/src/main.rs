fn main() {
    std::process::exit(gewave::cli::run());
}
