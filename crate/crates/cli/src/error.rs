use std::fmt;

/// Failures that end a run, each mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad config, bad flag or unreadable input: exit 2.
    Config(String),
    /// A realization left the representable range: exit 3.
    Divergence(String),
    /// Anything else the core rejected, reported as a config error since
    /// the inputs were accepted but not usable.
    Core(dipolesim_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Divergence(_) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Divergence(m) => write!(f, "numeric divergence: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dipolesim_core::Error> for CliError {
    fn from(e: dipolesim_core::Error) -> Self {
        use dipolesim_core::Error as E;
        match e {
            E::Divergence { .. } => CliError::Divergence(e.to_string()),
            E::EnsembleDiverged { ref failures, .. } => {
                let list: Vec<String> = failures
                    .iter()
                    .map(|f| format!("#{} at t = {} (max |f| = {:e})", f.realization, f.time, f.max_abs))
                    .collect();
                CliError::Divergence(format!("{e}; realizations: {}", list.join(", ")))
            }
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
