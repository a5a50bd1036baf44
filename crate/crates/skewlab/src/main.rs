fn main() {
    std::process::exit(skewlab::cli::run());
}
