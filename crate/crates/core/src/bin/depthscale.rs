fn main() {
    std::process::exit(depthscale::cli::run(std::env::args_os()));
}
