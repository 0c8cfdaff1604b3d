fn main() {
    std::process::exit(tclsim::cli::main_entry(std::env::args_os()));
}
