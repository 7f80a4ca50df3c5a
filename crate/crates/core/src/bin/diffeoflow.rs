fn main() {
    std::process::exit(diffeoflow::cli::run(std::env::args_os()));
}
