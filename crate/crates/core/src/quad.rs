//! Composite Gauss–Legendre quadrature with panel doubling.
//!
//! Nodes come from Newton iteration on the Legendre recurrence. The adaptive
//! driver doubles the panel count until two successive composite sums agree;
//! the agreement test allows for rounding through a floor proportional to the
//! integral of the magnitude.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: reals, complexes and small tuples of them.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl<A: QuadValue, B: QuadValue> QuadValue for (A, B) {
    fn zero() -> Self {
        (A::zero(), B::zero())
    }
    fn add(self, other: Self) -> Self {
        (self.0.add(other.0), self.1.add(other.1))
    }
    fn scale(self, s: f64) -> Self {
        (self.0.scale(s), self.1.scale(s))
    }
    fn magnitude(&self) -> f64 {
        self.0.magnitude().max(self.1.magnitude())
    }
}

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `order` nodes on [-1, 1].
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 20-point rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(20))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single-panel rule on [a, b]. Also returns the integral of |f|.
    pub fn panel<T: QuadValue, F: FnMut(f64) -> T>(&self, a: f64, b: f64, f: &mut F) -> (T, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::zero();
        let mut abs = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            abs += w * v.magnitude();
            acc = acc.add(v.scale(*w));
        }
        (acc.scale(half), abs * half.abs())
    }

    /// Composite rule with `panels` equal panels on [a, b].
    pub fn composite<T: QuadValue, F: FnMut(f64) -> T>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        f: &mut F,
    ) -> (T, f64) {
        let h = (b - a) / panels as f64;
        let mut acc = T::zero();
        let mut abs = 0.0;
        for j in 0..panels {
            let lo = a + h * j as f64;
            let hi = if j + 1 == panels { b } else { lo + h };
            let (v, m) = self.panel(lo, hi, f);
            acc = acc.add(v);
            abs += m;
        }
        (acc, abs)
    }
}

/// Legendre P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Controls for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadCtl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadCtl {
    fn default() -> Self {
        QuadCtl {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            initial_panels: 2,
            max_panels: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    /// |I_{2N} - I_N| at acceptance (an overestimate of the error of I_{2N}).
    pub error: f64,
    /// Integral of the magnitude of the integrand.
    pub abs_integral: f64,
    pub panels: usize,
}

/// Multiple of machine epsilon times ∫|f| below which two refinements count as
/// equal; cancellation makes tighter agreement meaningless.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Adaptive composite Gauss–Legendre on [a, b] by panel doubling.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    ctl: &QuadCtl,
) -> Result<Estimate<T>> {
    let rule = GaussLegendre::standard();
    let mut panels = ctl.initial_panels.max(1);
    let (mut prev, _) = rule.composite(a, b, panels, &mut f);
    loop {
        panels *= 2;
        let (cur, abs) = rule.composite(a, b, panels, &mut f);
        let diff = cur.add(prev.scale(-1.0)).magnitude();
        let tol = ctl.rel_tol * cur.magnitude() + ctl.abs_tol + ROUNDING_FLOOR * abs;
        if diff <= tol {
            return Ok(Estimate {
                value: cur,
                error: diff,
                abs_integral: abs,
                panels,
            });
        }
        if panels >= ctl.max_panels {
            return Err(Error::numeric(
                format!(
                    "quadrature on [{a}, {b}] not converged with {panels} panels (diff {diff:e})"
                ),
                None,
            ));
        }
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 20, 33] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights().iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(10);
        // degree 19 is the limit for 10 nodes
        let (v, _) = r.panel(0.0, 1.0, &mut |x: f64| x.powi(19));
        assert_relative_eq!(v, 1.0 / 20.0, epsilon = 1e-15);
    }

    #[test]
    fn adaptive_oscillatory() {
        let est = integrate(|x: f64| (40.0 * x).cos(), 0.0, 3.0, &QuadCtl::default()).unwrap();
        assert_relative_eq!(est.value, (120.0f64).sin() / 40.0, epsilon = 1e-14);
    }

    #[test]
    fn complex_and_pairs() {
        let est = integrate(
            |x: f64| (Complex64::new(0.0, x).exp(), x * x),
            0.0,
            std::f64::consts::PI,
            &QuadCtl::default(),
        )
        .unwrap();
        assert!((est.value.0 - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        assert_relative_eq!(
            est.value.1,
            std::f64::consts::PI.powi(3) / 3.0,
            epsilon = 1e-14
        );
    }
}
