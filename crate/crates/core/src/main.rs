fn main() {
    std::process::exit(rramkit::cli::main());
}
