fn main() {
    std::process::exit(chacon_lab::cli::main_with_args(std::env::args_os()));
}
