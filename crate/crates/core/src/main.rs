fn main() {
    std::process::exit(privqkd::cli::cli_main(std::env::args_os()));
}
