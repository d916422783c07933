fn main() {
    std::process::exit(rrt_cut::cli::run(std::env::args_os()));
}
