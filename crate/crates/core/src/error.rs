use thiserror::Error;

/// Errors surfaced by the solvers, generators, and experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A client has no AP with a non-zero achievable rate.
    #[error("client {client} is out of coverage of every AP")]
    ClientOutOfCoverage { client: usize },

    /// A solver produced (or was handed) a client with zero throughput.
    #[error("degenerate allocation: client {client} has non-positive throughput {throughput}")]
    DegenerateAllocation { client: usize, throughput: f64 },

    #[error("link from client {client} to AP {ap} is infeasible (zero rate)")]
    InfeasibleLink { client: usize, ap: usize },

    #[error("exhaustive search space has {cardinality} candidates, limit is {limit}")]
    SearchSpaceTooLarge { cardinality: f64, limit: u64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// Configuration file failed to parse or validate. `line` is 1-based when known.
    #[error("{}", config_message(.line, .message))]
    Config { line: Option<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn config_message(line: &Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("config error at line {l}: {message}"),
        None => format!("config error: {message}"),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
