fn main() {
    std::process::exit(dmpfem::cli::cli_main(std::env::args_os()));
}
