//! Command-line front end and HTTP ranking service.

pub mod commands;
pub mod failure;
pub mod service;
