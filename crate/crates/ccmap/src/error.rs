use std::fmt;

/// Problems with the inputs of a run, as opposed to numerical failures.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed scenario or output file; `line` is 1-based.
    Parse {
        line: usize,
        msg: String,
    },
    /// Parsed fine but violates an invariant.
    Invalid(String),
    Io(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, msg } => write!(f, "line {line}: {msg}"),
            ConfigError::Invalid(msg) => f.write_str(msg),
            ConfigError::Io(msg) => write!(f, "io: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError::Io(e.to_string())
    }
}

impl From<csv::Error> for ConfigError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize);
        match line {
            Some(line) => ConfigError::Parse { line, msg: e.to_string() },
            None => ConfigError::Io(e.to_string()),
        }
    }
}

/// Anything a command can fail with, mapped onto the process exit code.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(ccmap_core::Error),
}

impl RunError {
    /// 1 for configuration problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Core(e) if e.is_numerical() => write!(f, "numerical failure: {e}"),
            RunError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<ccmap_core::Error> for RunError {
    fn from(e: ccmap_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Config(e.into())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Config(e.into())
    }
}
