fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(willsim_cli::run_main(&args));
}
