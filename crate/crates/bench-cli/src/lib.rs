//! Library side of the `submax-bench` binary, exposed for integration tests.

pub mod experiment;
