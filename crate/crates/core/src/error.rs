use thiserror::Error;

/// Contract violations and numerical failures reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {constraint} (got {value})")]
    InvalidParameter {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },

    #[error("operator is not Hermitian (max |G - G^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("unsupported perturbative order {0}; supported orders are 1 and 3")]
    UnsupportedOrder(u32),

    #[error("photon index {index} outside [0, {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("photon index {0} is branch-degenerate (j + 1 is a perfect square)")]
    DegenerateIndex(u64),

    #[error("step size underflow at t = {t} (g_r = {g_r}, branch {branch})")]
    StepSizeUnderflow { t: f64, g_r: f64, branch: u32 },

    #[error("e-mesh too coarse to separate a nascent root pair for k in [{k_lo}, {k_hi}]")]
    MeshTooCoarse { k_lo: f64, k_hi: f64 },

    #[error("root count change near k = {k} could not be resolved below {resolution:e}")]
    UnresolvedBifurcation { k: f64, resolution: f64 },

    #[error("inconsistent measurements: {0}")]
    InvalidMeasurement(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(
    cond: bool,
    name: &'static str,
    constraint: &'static str,
    value: f64,
) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            constraint,
            value,
        })
    }
}
