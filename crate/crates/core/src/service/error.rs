use std::fmt;

use serde::{Deserialize, Serialize};

/// Where in the service a request failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Request,
    Normalize,
    Rewrite,
    Tokenize,
    Prosody,
    Synthesis,
    Encode,
    Publish,
    Archive,
    Utterance,
    Abbreviations,
    Dictionary,
    Settings,
    Scan,
    Storage,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Request => "request",
            Stage::Normalize => "normalize",
            Stage::Rewrite => "rewrite",
            Stage::Tokenize => "tokenize",
            Stage::Prosody => "prosody",
            Stage::Synthesis => "synthesis",
            Stage::Encode => "encode",
            Stage::Publish => "publish",
            Stage::Archive => "archive",
            Stage::Utterance => "utterance",
            Stage::Abbreviations => "abbreviations",
            Stage::Dictionary => "dictionary",
            Stage::Settings => "settings",
            Stage::Scan => "scan",
            Stage::Storage => "storage",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the caller should read a failure; drives the HTTP status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Invalid,
    NotFound,
    Conflict,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl ServiceError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl fmt::Display) -> Self {
        ServiceError {
            stage,
            kind,
            message: message.to_string(),
        }
    }

    pub fn invalid(stage: Stage, message: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Invalid, message)
    }

    pub fn not_found(stage: Stage, message: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::NotFound, message)
    }

    pub fn conflict(stage: Stage, message: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Conflict, message)
    }

    pub fn internal(stage: Stage, message: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Internal, message)
    }

    /// The `{stage, message}` body sent to clients.
    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            stage: self.stage,
            message: self.message.clone(),
        }
    }
}

impl fmt::Display for ServiceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for ServiceError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub stage: Stage,
    pub message: String,
}
