fn main() {
    std::process::exit(wikiprop::run(std::env::args_os()));
}
