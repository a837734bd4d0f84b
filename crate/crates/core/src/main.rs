fn main() {
    std::process::exit(vfedtrans::cli::main_with(std::env::args_os()));
}
