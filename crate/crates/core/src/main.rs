fn main() {
    std::process::exit(pushpull::cli::cli_main(std::env::args_os()));
}
