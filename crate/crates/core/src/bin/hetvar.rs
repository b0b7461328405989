fn main() {
    std::process::exit(hetvar::cli::cli_main(std::env::args_os()));
}
