fn main() {
    std::process::exit(rhtp_bench::cli::cli_main(std::env::args()));
}
