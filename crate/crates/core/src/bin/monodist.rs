fn main() {
    std::process::exit(monodist::cli::dispatch(std::env::args_os()));
}
