fn main() {
    std::process::exit(cegt_harness::cli_main(std::env::args_os()));
}
