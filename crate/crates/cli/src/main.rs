fn main() {
    std::process::exit(cim_cli::run(std::env::args_os()));
}
