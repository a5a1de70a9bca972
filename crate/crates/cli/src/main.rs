fn main() {
    std::process::exit(homolag_cli::cli_main(std::env::args_os()));
}
