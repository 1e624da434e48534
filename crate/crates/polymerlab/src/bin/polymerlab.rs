fn main() {
    std::process::exit(polymerlab::cli::main_entry());
}
