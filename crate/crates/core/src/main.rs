fn main() {
    std::process::exit(cwmap::cli::main_with_env());
}
