fn main() {
    std::process::exit(countlab::cli::run());
}
