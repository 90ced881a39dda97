fn main() {
    std::process::exit(ejmnet::cli::main())
}
