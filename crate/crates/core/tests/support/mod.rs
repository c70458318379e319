//! Shared helpers for integration tests: a minimal HTTP stub server and
//! independent scoring oracles.
#![allow(dead_code)]

pub mod http;
pub mod oracle;
