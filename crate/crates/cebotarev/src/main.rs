fn main() {
    std::process::exit(cebotarev::cli::run(std::env::args().skip(1)));
}
