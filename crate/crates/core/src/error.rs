use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0} lies outside its feasible set")]
    OutsideDomain(&'static str),
    #[error("dataset has no rounds")]
    EmptyDataset,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance too large for exhaustive enumeration ({0} vertex combinations)")]
    InstanceTooLarge(u128),
    #[error("round index {t} outside 1..={max}")]
    TimeOutOfRange { t: usize, max: usize },
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
