fn main() {
    // Placeholder while the library is under construction.
    eprintln!("gpscatter: not yet wired up");
    std::process::exit(2);
}
