fn main() {
    std::process::exit(skeleform::run(std::env::args_os()));
}
