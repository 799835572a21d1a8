fn main() {
    let code = hawkes_lob::cli::run(std::env::args_os());
    std::process::exit(code);
}
