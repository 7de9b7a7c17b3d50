use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Pipeline stage, attached to errors raised inside [`crate::pipeline`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Phantom,
    Synthesis,
    Beamform,
    Clutter,
    Estimation,
    Fusion,
    Evaluation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Phantom => "phantom",
            Stage::Synthesis => "synthesis",
            Stage::Beamform => "beamform",
            Stage::Clutter => "clutter",
            Stage::Estimation => "estimation",
            Stage::Fusion => "fusion",
            Stage::Evaluation => "evaluation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration value breaks an invariant. `key` is the config-file key.
    #[error("invalid `{key}`: {reason}")]
    Validation { key: &'static str, reason: String },

    #[error("{what} must be {expected}, got {value}")]
    Domain {
        what: &'static str,
        expected: &'static str,
        value: f64,
    },

    #[error("round-trip time {time_s:e} s falls outside the {window_s:e} s sample window")]
    DepthRange { time_s: f64, window_s: f64 },

    #[error("truncation rank {n_cut} must be below the ensemble length {frames}")]
    Rank { n_cut: usize, frames: usize },

    #[error("line has zero variance")]
    FlatSignal,

    #[error("no frequency pair reaches quality {threshold}")]
    InsufficientQuality { threshold: f64 },

    #[error("no in-vessel pixel is valid in every ensemble")]
    NoValidPixels,

    #[error("depth {depth_m} m is served by neither branch")]
    Coverage { depth_m: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(key: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            key,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, expected: &'static str, value: f64) -> Self {
        Error::Domain {
            what,
            expected,
            value,
        }
    }

    /// Innermost error, with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
