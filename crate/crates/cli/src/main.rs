fn main() {
    std::process::exit(lgcalab::run(std::env::args_os()));
}
