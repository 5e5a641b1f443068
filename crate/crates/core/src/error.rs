use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input value.
    #[error("invalid input: {0}")]
    Input(String),

    /// Query outside the region where a model is defined (e.g. lookup-table hull).
    #[error("outside model domain: {0}")]
    Domain(String),

    /// Every grid point received (numerically) zero posterior mass.
    #[error("degenerate posterior: observations have zero likelihood on the whole grid")]
    DegeneratePosterior,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("problem too large: {what} = {got}, limit is {limit}")]
    Capacity {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    /// A technological frontier with a single task has no trade-off.
    #[error("degenerate frontier: at least two tasks are required, got {0}")]
    NonDegeneracy(usize),

    #[error("undefined result: {0}")]
    Undefined(String),

    /// A model failed one of the ability-model axioms at construction.
    #[error("axiom violated: {0}")]
    Axiom(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Input(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_strictly_increasing(name: &str, values: &[f64], min_len: usize) -> Result<()> {
    if values.len() < min_len {
        return Err(Error::Input(format!(
            "{name} needs at least {min_len} points, got {}",
            values.len()
        )));
    }
    for &v in values {
        ensure_finite(name, v)?;
    }
    if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Input(format!(
            "{name} must be strictly increasing ({} followed by {})",
            w[0], w[1]
        )));
    }
    Ok(())
}
