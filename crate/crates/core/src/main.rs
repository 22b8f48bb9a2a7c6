fn main() { std::process::exit(chancecheck::cli::run()) }
