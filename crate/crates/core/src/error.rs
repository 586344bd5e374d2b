use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid register: {0}")]
    InvalidRegister(String),
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("{name} = {value} is outside {allowed}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },
    #[error("photon number in mode `{mode}` would exceed cutoff {cutoff}")]
    CutoffOverflow { mode: String, cutoff: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state is not normalized (norm {0:.3e})")]
    NotNormalized(f64),
    #[error("invalid density operator: {0}")]
    NotPhysical(String),
    #[error("conditioning on a null event (probability {0:.3e})")]
    NullEvent(f64),
    #[error("{0} is undefined because p1 = 0")]
    ZeroSingles(&'static str),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("bound cache: {0}")]
    Cache(String),
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            allowed: "[0, 1]",
        })
    }
}
