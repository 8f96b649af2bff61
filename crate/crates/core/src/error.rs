use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Exit status for input and configuration problems.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for failures detected during the numerical work.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{0} required")]
    Missing(String),

    #[error("root bracketing failed for mode {k}")]
    RootBracket { k: usize },

    #[error("discretization quality: {0}")]
    Discretization(String),

    #[error("support mode {mode} has a zero tip value; choose a different support mode")]
    ZeroSupport { mode: usize },

    #[error("undamped mode {mode} is driven at resonance; add damping or detune the forcing")]
    Resonance { mode: usize },

    #[error("plateau window [{start}, {end}] overlaps a kernel jump at tau = {tau}")]
    WindowOverlapsJump { start: f64, end: f64, tau: f64 },

    #[error("singular model: contact force undefined ({detail}); the regularity criterion [L+]_2 != 0 fails")]
    SingularModel { detail: String },

    #[error("chatter overflow: more than {max_events} impact events")]
    ChatterOverflow { max_events: usize },

    #[error("vanishing force sensitivity at dt = {delta_t:e}; use at least {modes_needed} modes")]
    VanishingSensitivity { delta_t: f64, modes_needed: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }

    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::Missing(_)
                | Error::ZeroSupport { .. }
                | Error::Resonance { .. }
                | Error::WindowOverlapsJump { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            EXIT_VALIDATION
        } else {
            EXIT_NUMERICAL
        }
    }
}

pub(crate) fn ensure(cond: bool, field: &str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(field, reason()))
    }
}
