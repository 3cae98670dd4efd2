fn main() {
    std::process::exit(dnp_kinetics::cli::main_with_args(std::env::args_os()));
}
