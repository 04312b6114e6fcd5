use thiserror::Error;

/// A failed run, classified by exit status.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("config: {0:#}")]
    Config(anyhow::Error),
    #[error("data: {0:#}")]
    Data(anyhow::Error),
    #[error("numerical: {0:#}")]
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

pub trait Classify<T> {
    fn config(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
    fn data(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into().context(what())))
    }

    fn data(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into().context(what())))
    }
}

pub fn config_error(msg: impl Into<String>) -> Failure {
    Failure::Config(anyhow::anyhow!(msg.into()))
}

pub fn data_error(msg: impl Into<String>) -> Failure {
    Failure::Data(anyhow::anyhow!(msg.into()))
}
