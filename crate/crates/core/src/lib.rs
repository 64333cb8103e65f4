pub mod aggregation;
pub mod analytics;
pub mod attention;
pub mod config;
pub mod error;
pub mod report;
pub mod service;
pub mod sim;
pub mod summarizer;

pub use error::{Error, ErrorKind, Result};
