fn main() {
    std::process::exit(moment_lab_cli::run());
}
