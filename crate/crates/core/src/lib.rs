pub mod audiobus;
pub mod phonemes;
pub mod predict;
pub mod rules;
pub mod scanning;
pub mod textprep;

#[cfg(feature = "service")]
pub mod cli;
pub mod service;
