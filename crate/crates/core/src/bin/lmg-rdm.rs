fn main() {
    std::process::exit(lmg_rdm::cli::run(std::env::args_os()));
}
