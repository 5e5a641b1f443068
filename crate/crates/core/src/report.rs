use std::fmt;

/// Outcome of an exhaustive property check over a finite set of cases.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport<V> {
    /// Number of cases evaluated before stopping.
    pub checked: usize,
    /// First failing case, in the check's documented iteration order.
    pub violation: Option<V>,
}

impl<V> CheckReport<V> {
    pub fn pass(checked: usize) -> Self {
        Self {
            checked,
            violation: None,
        }
    }

    pub fn fail(checked: usize, violation: V) -> Self {
        Self {
            checked,
            violation: Some(violation),
        }
    }

    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

impl<V: fmt::Display> fmt::Display for CheckReport<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => write!(f, "pass ({} cases)", self.checked),
            Some(v) => write!(f, "FAIL after {} cases: {v}", self.checked),
        }
    }
}
