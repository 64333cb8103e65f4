use thiserror::Error;

/// Broad class of a failure; drives HTTP status codes and CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Authorization,
    NotFound,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Authorization => 3,
            ErrorKind::NotFound => 4,
            ErrorKind::Internal => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("eye width is degenerate ({width:.3e})")]
    DegenerateWidth { width: f64 },
    #[error("invalid landmark record: {0}")]
    InvalidLandmarks(String),
    #[error("no covered minutes in session")]
    NoCoveredMinutes,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("no minute has enough covered peers for class comparison")]
    InsufficientClassData,
    #[error("course `{0}` is already registered")]
    DuplicateCourse(String),
    #[error("passcode does not match any course")]
    UnknownPasscode,
    #[error("{0}")]
    Unauthorized(String),
    #[error("session `{0}` not found")]
    UnknownSession(String),
    #[error("session is closed")]
    SessionClosed,
    #[error("session is still open")]
    SessionNotClosed,
    #[error("course already has an open session `{0}`")]
    SessionAlreadyOpen(String),
    #[error("malformed batch: {0}")]
    MalformedBatch(String),
    #[error("range out of bounds: {0}")]
    OutOfRange(String),
    #[error("no attention trace for this student in the session")]
    UnknownStudent,
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("storage: {0}")]
    Storage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable identifier, shared by the HTTP API and the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateWidth { .. } => "degenerate_width",
            Error::InvalidLandmarks(_) => "invalid_landmarks",
            Error::NoCoveredMinutes => "no_covered_minutes",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::InsufficientClassData => "insufficient_class_data",
            Error::DuplicateCourse(_) => "duplicate_course",
            Error::UnknownPasscode => "unknown_passcode",
            Error::Unauthorized(_) => "unauthorized",
            Error::UnknownSession(_) => "unknown_session",
            Error::SessionClosed => "session_closed",
            Error::SessionNotClosed => "session_not_closed",
            Error::SessionAlreadyOpen(_) => "session_already_open",
            Error::MalformedBatch(_) => "malformed_batch",
            Error::OutOfRange(_) => "out_of_range",
            Error::UnknownStudent => "unknown_student",
            Error::UnknownStrategy(_) => "unknown_strategy",
            Error::InvalidRequest(_) => "invalid_request",
            Error::Storage(_) => "storage_error",
            Error::Io(_) => "io_error",
        }
    }

    /// Rebuilds an error from its `code` and display message, as returned by
    /// the HTTP API.
    pub fn from_wire(code: &str, message: &str) -> Error {
        let quoted = || message.split('`').nth(1).unwrap_or(message).to_string();
        let after = |prefix: &str| message.strip_prefix(prefix).unwrap_or(message).to_string();
        match code {
            "invalid_landmarks" => Error::InvalidLandmarks(after("invalid landmark record: ")),
            "no_covered_minutes" => Error::NoCoveredMinutes,
            "insufficient_class_data" => Error::InsufficientClassData,
            "duplicate_course" => Error::DuplicateCourse(quoted()),
            "unknown_passcode" => Error::UnknownPasscode,
            "unauthorized" => Error::Unauthorized(message.to_string()),
            "unknown_session" => Error::UnknownSession(quoted()),
            "session_closed" => Error::SessionClosed,
            "session_not_closed" => Error::SessionNotClosed,
            "session_already_open" => Error::SessionAlreadyOpen(quoted()),
            "malformed_batch" => Error::MalformedBatch(after("malformed batch: ")),
            "out_of_range" => Error::OutOfRange(after("range out of bounds: ")),
            "unknown_student" => Error::UnknownStudent,
            "unknown_strategy" => Error::UnknownStrategy(quoted()),
            "invalid_request" => Error::InvalidRequest(after("invalid request: ")),
            "storage_error" => Error::Storage(after("storage: ")),
            _ => Error::Storage(format!("{code}: {message}")),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnknownPasscode | Error::Unauthorized(_) => ErrorKind::Authorization,
            Error::UnknownSession(_) | Error::UnknownStudent => ErrorKind::NotFound,
            Error::Storage(_) | Error::Io(_) => ErrorKind::Internal,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
