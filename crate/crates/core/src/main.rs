fn main() { std::process::exit(permdiv::cli::dispatch(std::env::args())) }
