fn main() {
    std::process::exit(railsim::main_with_args(std::env::args_os()));
}
