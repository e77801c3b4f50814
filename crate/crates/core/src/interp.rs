//! Monotone piecewise-cubic Hermite interpolation.

/// Derivative at `xs[i]` of the interpolating polynomial through up to five
/// neighbouring nodes.
fn lagrange_slope(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let n = xs.len();
    let width = 5.min(n);
    let start = i.saturating_sub(2).min(n - width);
    let idx = start..start + width;
    let xi = xs[i];
    let mut d = 0.0;
    for j in idx.clone().filter(|&j| j != i) {
        // L_j'(x_i) = 1/(x_j − x_i) · Π_{m ≠ i, j} (x_i − x_m)/(x_j − x_m)
        let mut w = 1.0 / (xs[j] - xi);
        for m in idx.clone().filter(|&m| m != i && m != j) {
            w *= (xi - xs[m]) / (xs[j] - xs[m]);
        }
        d += (ys[j] - ys[i]) * w;
    }
    d
}

/// Shape-preserving cubic through nondecreasing data.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` strictly increasing, `ys` nondecreasing, at least two nodes.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len());
        let n = xs.len();
        let ds = (0..n).map(|i| lagrange_slope(&xs, &ys, i)).collect();
        Self::limited(xs, ys, ds)
    }

    /// Hermite interpolant with the given slopes, clipped so that the
    /// interpolant stays monotone: `0 ≤ d_i ≤ 3·min(adjacent secants)`.
    pub fn limited(xs: Vec<f64>, ys: Vec<f64>, mut ds: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len() && xs.len() == ds.len());
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        for i in 0..n {
            let left = if i > 0 { secants[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < n { secants[i] } else { f64::INFINITY };
            let cap = 3.0 * left.min(right);
            ds[i] = if cap <= 0.0 || !ds[i].is_finite() { 0.0 } else { ds[i].clamp(0.0, cap) };
        }
        Self { xs, ys, ds }
    }

    /// Cubic Hermite interpolant with prescribed node slopes.
    pub fn from_slopes(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len() && xs.len() == ds.len());
        Self { xs, ys, ds }
    }

    pub fn slopes(&self) -> &[f64] {
        &self.ds
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn locate(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&xi| xi <= x);
        i.clamp(1, self.xs.len() - 1) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo() {
            return self.ys[0];
        }
        if x >= self.hi() {
            return *self.ys.last().unwrap();
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i], self.ds[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
    }

    /// Derivative of the interpolant; zero outside the node range.
    pub fn derivative(&self, x: f64) -> f64 {
        if x < self.lo() || x > self.hi() {
            return 0.0;
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i], self.ds[i + 1]);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0 + (-6.0 * t2 + 6.0 * t) * y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (3.0 * t2 - 2.0 * t) * d1
    }
}
