fn main() {
    std::process::exit(peakmix::cli::run());
}
