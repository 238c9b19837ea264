use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ncgabor::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for frame failures, 4 for CG failures and 1 for
    /// anything that means an identity did not hold.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

pub fn core_exit_code(e: &ncgabor::Error) -> u8 {
    use ncgabor::Error as E;
    match e {
        E::InvalidParams(_)
        | E::NotCoprime { .. }
        | E::InvalidGrid(_)
        | E::GridMismatch(_)
        | E::PeriodTooSmall { .. }
        | E::InvalidArgument(_)
        | E::Parse(_)
        | E::Io(_) => 2,
        E::NotAFrame { .. } => 3,
        E::CgStagnation { .. } => 4,
        _ => 1,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
