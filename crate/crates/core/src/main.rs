fn main() {
    std::process::exit(snapsynth::cli::run(std::env::args_os()));
}
