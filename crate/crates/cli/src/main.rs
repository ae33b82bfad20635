fn main() {
    std::process::exit(sphere_lab_cli::run(std::env::args()));
}
