fn main() {
    std::process::exit(scalefree::cli::main_with_env());
}
