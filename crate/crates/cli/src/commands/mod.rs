pub mod bench;
pub mod check;
pub mod gen;
pub mod solve;

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;
