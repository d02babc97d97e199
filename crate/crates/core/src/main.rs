fn main() {
    std::process::exit(seqgauss::cli::run(std::env::args_os()));
}
