fn main() {
    std::process::exit(inkline::cli::main());
}
