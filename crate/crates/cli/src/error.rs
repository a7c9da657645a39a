use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// TOML syntax or schema errors; the message carries line and field.
    #[error("config parse error: {0}")]
    Parse(String),

    /// Semantically invalid config, such as an undefined alphabet.
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid environment variable {name}: {reason}")]
    Env { name: &'static str, reason: String },

    #[error(transparent)]
    Core(#[from] infoloss::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;
