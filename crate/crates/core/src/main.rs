fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(cea::cli::run(&argv));
}
