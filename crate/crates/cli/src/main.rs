fn main() { std::process::exit(tetragonal::cli::main()) }
