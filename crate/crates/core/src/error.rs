use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("run needs {pulses} pulses, more than the supported {capacity}")]
    PulseCapacity { pulses: f64, capacity: u64 },

    #[error("trace has {0} bins, at least 2 are required")]
    TooFewBins(usize),

    #[error("stream has {0} records, at least 2 are required")]
    InsufficientEvents(usize),

    #[error("dataset has {points} points, at least {required} are required")]
    TooFewPoints { points: usize, required: usize },

    #[error("singular fit geometry: {0}")]
    SingularGeometry(&'static str),

    #[error("fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
