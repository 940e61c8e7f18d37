use core::fmt;

/// Everything that can go wrong inside the control loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector field evaluated to a non-finite value during integration.
    Integration { t: f64 },
    /// Reference queried outside its precomputed range.
    Domain { t: f64, start: f64, end: f64 },
    /// The hat system produced a non-finite state while predicting the horizon.
    Prediction { t: f64 },
    /// The normal equations could not be factored.
    Solver { degree: usize, horizon: f64 },
    /// Invalid controller parameters or path specification.
    InvalidConfig(&'static str),
    /// Reference inputs violate the lower bound on |v_r|.
    Assumption { c: f64 },
    /// A fault raised while handling event `index`.
    AtEvent { index: usize, source: alloc::boxed::Box<Error> },
}

impl Error {
    pub(crate) fn at_event(self, index: usize) -> Self {
        Error::AtEvent { index, source: alloc::boxed::Box::new(self) }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Integration { t } => write!(f, "non-finite vector field at t = {t}"),
            Error::Domain { t, start, end } => {
                write!(f, "reference time {t} outside [{start}, {end}]")
            }
            Error::Prediction { t } => write!(f, "hat-system prediction diverged at t = {t}"),
            Error::Solver { degree, horizon } => write!(
                f,
                "normal equations not positive definite (degree {degree}, horizon {horizon} s)"
            ),
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::Assumption { c } => {
                write!(f, "reference speed lower bound c = {c} is not positive")
            }
            Error::AtEvent { index, source } => write!(f, "event {index}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::AtEvent { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
