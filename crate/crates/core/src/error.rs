use thiserror::Error;

/// Errors raised by the statistics engine, the optimizer and the oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain (negative mean,
    /// probability outside `[0, 1]`, non-positive tolerance, ...).
    #[error("parameter `{name}` = {value} is outside its domain: {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// A structurally invalid configuration, such as a non power-of-two unit
    /// count for a scheme built from binary stages.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A computation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Two objects that must describe the same setup do not.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected: "a probability in [0, 1]",
        })
    }
}

pub(crate) fn check_tolerance(value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "tolerance",
            value,
            expected: "a finite value > 0",
        })
    }
}
