fn main() {
    std::process::exit(v2xcms::cli_main(std::env::args_os()));
}
