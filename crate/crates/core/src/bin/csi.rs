fn main() {
    std::process::exit(csi_lossy::cli::run(std::env::args_os()));
}
