use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub fe: usize,
    pub best_error: f64,
}

/// Best-so-far error as a step function of the counted evaluations.
///
/// `fe` is strictly increasing and `best_error` non-increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    points: Vec<TracePoint>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a point. A repeated `fe` overwrites the previous entry.
    pub fn record(&mut self, fe: usize, best_error: f64) {
        if let Some(last) = self.points.last_mut() {
            debug_assert!(fe >= last.fe, "trace fe went backwards");
            debug_assert!(best_error <= last.best_error, "best-so-far error increased");
            if last.fe == fe {
                last.best_error = best_error;
                return;
            }
        }
        self.points.push(TracePoint { fe, best_error });
    }

    pub fn points(&self) -> &[TracePoint] {
        &self.points
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Value carried forward to `fe`. Before the first point, the first
    /// point's value.
    pub fn value_at(&self, fe: usize) -> Option<f64> {
        let first = self.points.first()?;
        let idx = self.points.partition_point(|p| p.fe <= fe);
        Some(if idx == 0 {
            first.best_error
        } else {
            self.points[idx - 1].best_error
        })
    }

    pub fn is_valid(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[0].fe < w[1].fe && w[1].best_error <= w[0].best_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carries_values_forward() {
        let mut t = ConvergenceTrace::new();
        t.record(150, 10.0);
        t.record(151, 8.0);
        t.record(160, 3.0);
        assert_eq!(t.value_at(100), Some(10.0));
        assert_eq!(t.value_at(150), Some(10.0));
        assert_eq!(t.value_at(155), Some(8.0));
        assert_eq!(t.value_at(2000), Some(3.0));
        assert!(t.is_valid());
        assert_eq!(ConvergenceTrace::new().value_at(5), None);
    }
}
