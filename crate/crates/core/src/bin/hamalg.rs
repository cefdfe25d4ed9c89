fn main() {
    std::process::exit(hamalg::cli::main_with_std());
}
