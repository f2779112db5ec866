use alloc::string::String;
use alloc::vec::Vec;

/// Structural failure in network configuration or tensor plumbing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetError {
    Shape { what: String, dims: Vec<usize> },
    Config(String),
}

impl NetError {
    pub(crate) fn shape(what: &str, dims: &[usize]) -> Self {
        NetError::Shape {
            what: what.into(),
            dims: dims.to_vec(),
        }
    }
}

impl core::fmt::Display for NetError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NetError::Shape { what, dims } => write!(f, "{what} (got {dims:?})"),
            NetError::Config(msg) => write!(f, "invalid architecture: {msg}"),
        }
    }
}

impl core::error::Error for NetError {}
