fn main() {
    std::process::exit(ratbounds::cli::main());
}
