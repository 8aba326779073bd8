use std::fmt;
use std::sync::Arc;

/// A real function on `[0, ∞)` together with the points where it fails to be
/// smooth. Integrators stop at the breakpoints instead of stepping over them.
#[derive(Clone)]
pub struct ScalarFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    breakpoints: Vec<f64>,
}

impl ScalarFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            breakpoints: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|p| p.is_finite() && *p > 0.0);
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.breakpoints = points;
        self
    }

    /// `self` on `[0, end]` and zero afterwards.
    pub fn truncated(&self, end: f64) -> Self {
        let inner = self.f.clone();
        let mut bp: Vec<f64> = self.breakpoints.iter().copied().filter(|&b| b < end).collect();
        bp.push(end);
        Self::new(move |t| if t <= end { inner(t) } else { 0.0 }).with_breakpoints(bp)
    }

    /// Pointwise `c * self`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.f.clone();
        Self {
            f: Arc::new(move |t| c * inner(t)),
            breakpoints: self.breakpoints.clone(),
        }
    }

    /// Pointwise sum.
    pub fn plus(&self, other: &ScalarFn) -> Self {
        let (a, b) = (self.f.clone(), other.f.clone());
        let mut bp = self.breakpoints.clone();
        bp.extend_from_slice(&other.breakpoints);
        Self::new(move |t| a(t) + b(t)).with_breakpoints(bp)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.breakpoints.iter().copied().filter(|&p| p > a && p < b).collect()
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFn")
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_adds_breakpoint() {
        let f = ScalarFn::constant(1.0).truncated(1.0);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(1.5), 0.0);
        assert_eq!(f.breakpoints(), &[1.0]);
    }

    #[test]
    fn breakpoints_are_sorted_and_positive() {
        let f = ScalarFn::zero().with_breakpoints(vec![3.0, -1.0, 0.0, 1.0, 3.0, f64::NAN]);
        assert_eq!(f.breakpoints(), &[1.0, 3.0]);
    }
}
