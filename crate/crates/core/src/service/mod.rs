//! The local service: pipeline orchestration plus the user's persistent
//! state (abbreviations, dictionary, archive, settings, scan sessions).
//!
//! [`pipeline`], [`settings`] and [`archive`] are plain library code. The
//! stateful [`Service`] and its HTTP front end need the `service` feature.

pub mod archive;
pub mod error;
pub mod persist;
pub mod pipeline;
pub mod settings;

#[cfg(feature = "service")]
mod app;
#[cfg(feature = "service")]
pub mod http;
#[cfg(feature = "service")]
mod sessions;

pub use archive::{ArchiveEntry, MessageArchive};
pub use error::{ErrorBody, ErrorKind, ServiceError, Stage};
pub use pipeline::{Pipeline, Utterance};
pub use settings::Settings;

#[cfg(feature = "service")]
pub use app::{Service, StoredUtterance, UTTERANCE_STORE_LIMIT};
#[cfg(feature = "service")]
pub use sessions::{ScanSessionInfo, ScanUpdate};
