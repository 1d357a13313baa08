use thiserror::Error;

/// Library-wide error type.
///
/// The two broad classes matter to callers: `Input` means the request itself
/// was malformed (bad JSON, inconsistent dimensions, unknown catalog name),
/// everything else means a well-formed request hit a precondition the
/// computation cannot work around (characteristic point, unsupported step,
/// singular configuration).
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Input(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("characteristic point: {0}")]
    CharacteristicPoint(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure is in the request itself rather than in the
    /// geometry it describes.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Input(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
