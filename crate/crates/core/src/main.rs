fn main() {
    std::process::exit(foliate::cli::main_entry(std::env::args_os()));
}
