//! Exit-code classification.

use std::fmt;

use p4ip_core::Error as CoreError;

pub const SUCCESS: i32 = 0;
pub const USAGE: i32 = 1;
pub const DATA: i32 = 2;
pub const SOLVER: i32 = 3;

/// A request that is malformed regardless of the data it names.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Maps an error chain to a process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return USAGE;
        }
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Solver { .. } | CoreError::Optimizer(_) | CoreError::Denoiser { .. } => {
                    SOLVER
                }
                CoreError::InvalidParameter(_) => USAGE,
                _ => DATA,
            };
        }
    }
    DATA
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn classification() {
        assert_eq!(exit_code(&usage("bad flag")), USAGE);
        let solver: anyhow::Error = CoreError::Solver {
            iteration: 3,
            source: Box::new(CoreError::InvalidImage("x".into())),
        }
        .into();
        assert_eq!(exit_code(&solver), SOLVER);
        let io = CoreError::InvalidImage("bad pixels".into());
        assert_eq!(exit_code(&anyhow::Error::from(io).context("loading")), DATA);
        let wrapped = Err::<(), _>(CoreError::InvalidParameter("peak".into())).context("degrade");
        assert_eq!(exit_code(&wrapped.unwrap_err()), USAGE);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), DATA);
    }
}
