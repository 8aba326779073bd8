//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate falls below `max(abs_tol, rel_tol * |I|)`. Error estimates follow
//! the QUADPACK scaling of `|K15 - G7|`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_intervals: 4000,
        }
    }

    /// Purely relative tolerance. Subdivision decisions are then invariant under
    /// rescaling of the integrand, which keeps homogeneity checks exact.
    pub fn relative(rel_tol: f64) -> Self {
        Self::new(0.0, rel_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
}

/// One 15-point Kronrod panel: (value, error estimate).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kron.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kron += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kron * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((kron - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrate `f` over `[a, b]` (requires `a <= b`).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let (v, e) = gk15(&f, a, b);
    if !v.is_finite() {
        return Err(Error::Quadrature {
            a,
            b,
            estimate: f64::INFINITY,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    // panels too narrow to split are retired here
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                a,
                b,
                estimate: total_err,
            });
        }
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b || (p.b - p.a) < 1e3 * f64::EPSILON * p.a.abs().max(p.b.abs()) {
            frozen_value += p.value;
            frozen_err += p.err;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&f, p.a, mid);
        let (v2, e2) = gk15(&f, mid, p.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Quadrature {
                a: p.a,
                b: p.b,
                estimate: f64::INFINITY,
            });
        }
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.err;
        heap.push(Panel {
            a: p.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: p.b,
            value: v2,
            err: e2,
        });
    }
    // resum to shed the drift of the running updates
    let value = heap.iter().map(|p| p.value).sum::<f64>() + frozen_value;
    let abs_error = heap.iter().map(|p| p.err).sum::<f64>() + frozen_err;
    Ok(QuadResult { value, abs_error })
}

/// Cumulative integrals `∫_{nodes[0]}^{nodes[i]} f` for every node.
///
/// Each panel `[nodes[i], nodes[i+1]]` is integrated to the relative tolerance
/// on its own, plus an even share of `abs_tol`.
pub fn integrate_cumulative<F: Fn(f64) -> f64>(f: F, nodes: &[f64], opts: QuadOptions) -> Result<(Vec<f64>, f64)> {
    let mut out = Vec::with_capacity(nodes.len());
    if nodes.is_empty() {
        return Ok((out, 0.0));
    }
    let share = QuadOptions {
        abs_tol: opts.abs_tol / nodes.len().max(1) as f64,
        ..opts
    };
    let mut acc = 0.0;
    let mut err = 0.0;
    out.push(0.0);
    for w in nodes.windows(2) {
        let r = integrate(&f, w[0], w[1], share)?;
        acc += r.value;
        err += r.abs_error;
        out.push(acc);
    }
    Ok((out, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact_on_one_panel() {
        let (v, _) = gk15(&|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0);
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_bell() {
        let r = integrate(|x: f64| (-x * x).exp(), -10.0, 10.0, QuadOptions::new(1e-13, 1e-13)).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫₀¹ x^{-1/2} = 2
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, QuadOptions::new(1e-9, 1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn kink_resolved() {
        let r = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, QuadOptions::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let nodes: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let (c, _) = integrate_cumulative(|x: f64| x.cos(), &nodes, QuadOptions::new(0.0, 1e-13)).unwrap();
        for (x, v) in nodes.iter().zip(&c) {
            assert!((v - x.sin()).abs() < 1e-12);
        }
    }
}
