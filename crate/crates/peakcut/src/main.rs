fn main() {
    std::process::exit(peakcut::main_with_args(std::env::args_os()));
}
