fn main() {
    std::process::exit(bdi::cli::main());
}
