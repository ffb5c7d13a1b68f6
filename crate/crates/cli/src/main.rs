fn main() {
    std::process::exit(impulse_dose::run());
}
