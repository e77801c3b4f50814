//! Special functions and Gaussian quadrature rules.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// `π/2 − Si(z)` for `z ≥ 0`.
pub fn si_complement(z: f64) -> f64 {
    assert!(z >= 0.0);
    if z <= 2.0 {
        return FRAC_PI_2 - si_series(z);
    }
    // continued fraction for E1(iz)
    let (mut b_re, b_im) = (1.0, z);
    let tiny = 1e-300;
    let (mut c_re, mut c_im) = (1.0 / tiny, 0.0);
    let (mut d_re, mut d_im) = cinv(b_re, b_im);
    let (mut h_re, mut h_im) = (d_re, d_im);
    for i in 2..200 {
        let a = -((i - 1) * (i - 1)) as f64;
        b_re += 2.0;
        // d = 1 / (a d + b)
        let (t_re, t_im) = (a * d_re + b_re, a * d_im + b_im);
        (d_re, d_im) = cinv(t_re, t_im);
        // c = b + a / c
        let (ic_re, ic_im) = cinv(c_re, c_im);
        c_re = b_re + a * ic_re;
        c_im = b_im + a * ic_im;
        let (del_re, del_im) = (c_re * d_re - c_im * d_im, c_re * d_im + c_im * d_re);
        (h_re, h_im) = (h_re * del_re - h_im * del_im, h_re * del_im + h_im * del_re);
        if (del_re - 1.0).abs() + del_im.abs() < 1e-16 {
            break;
        }
    }
    // h ← (cos z − i sin z) h ; π/2 − Si = −Im h
    let (cz, sz) = (z.cos(), z.sin());
    let im = cz * h_im - sz * h_re;
    -im
}

fn cinv(re: f64, im: f64) -> (f64, f64) {
    let d = re * re + im * im;
    (re / d, -im / d)
}

fn si_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = z;
    let z2 = z * z;
    for k in 0..60 {
        let n = 2 * k + 1;
        let contrib = term / n as f64;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs() {
            break;
        }
        term *= -z2 / ((n + 1) * (n + 2)) as f64;
    }
    sum
}

/// `∫_z^∞ (1 − cos w)/w² dw` for `z > 0`.
pub fn one_minus_cos_tail(z: f64) -> f64 {
    assert!(z > 0.0);
    let s = (0.5 * z).sin();
    2.0 * s * s / z + si_complement(z)
}

/// Golub–Welsch: nodes and weights from a Jacobi matrix with diagonal `a`,
/// off-diagonal `sqrt(b[1..])` and zeroth moment `mu0`.
fn golub_welsch(a: &[f64], b: &[f64], mu0: f64) -> Vec<(f64, f64)> {
    let n = a.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = a[i];
        if i + 1 < n {
            let s = b[i + 1].sqrt();
            j[(i, i + 1)] = s;
            j[(i + 1, i)] = s;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Gauss–Hermite rule for the standard normal: `E f(Z) ≈ Σ w_i f(z_i)`.
pub fn gauss_hermite_normal(n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 || n > 200 {
        return Err(Error::InvalidArgument(format!("Hermite order {n} outside 1..=200")));
    }
    // probabilists' Hermite: a_k = 0, b_k = k
    let a = vec![0.0; n];
    let b: Vec<f64> = (0..n).map(|k| k as f64).collect();
    Ok(golub_welsch(&a, &b, 1.0))
}

/// Recurrence coefficients of the monic polynomials orthogonal for
/// `e^{−s²}` on `[0, ∞)`, by the discretized Stieltjes procedure.
fn half_range_recurrence(n: usize) -> (Vec<f64>, Vec<f64>) {
    // composite Gauss–Legendre discretization of [0, 13]; e^{-169} is negligible
    let panels = 400;
    let gl = gauss_legendre(20);
    let width = 13.0 / panels as f64;
    let mut xs = Vec::with_capacity(panels * gl.len());
    let mut ws = Vec::with_capacity(panels * gl.len());
    for p in 0..panels {
        let lo = p as f64 * width;
        for &(x, w) in &gl {
            let s = lo + 0.5 * width * (x + 1.0);
            xs.push(s);
            ws.push(0.5 * width * w * (-s * s).exp());
        }
    }
    let m = xs.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut p_prev = vec![0.0; m];
    let mut p_cur = vec![1.0; m];
    let mut norm_prev = 1.0;
    for k in 0..n {
        let norm: f64 = (0..m).map(|i| ws[i] * p_cur[i] * p_cur[i]).sum();
        let xnorm: f64 = (0..m).map(|i| ws[i] * xs[i] * p_cur[i] * p_cur[i]).sum();
        a[k] = xnorm / norm;
        b[k] = if k == 0 { norm } else { norm / norm_prev };
        let mut next: Vec<f64> = (0..m).map(|i| (xs[i] - a[k]) * p_cur[i] - b[k] * p_prev[i]).collect();
        // the recurrence is homogeneous, so rescaling both terms keeps it valid
        let f = 1.0 / norm.sqrt();
        p_cur.iter_mut().for_each(|v| *v *= f);
        next.iter_mut().for_each(|v| *v *= f);
        p_prev = std::mem::replace(&mut p_cur, next);
        norm_prev = 1.0;
    }
    (a, b)
}

type Rule = Arc<Vec<(f64, f64)>>;

/// Rules are costly to build and reused across calls, so they are memoized by order.
fn cached(cache: &OnceLock<Mutex<HashMap<usize, Rule>>>, n: usize, build: impl FnOnce() -> Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = map.lock().unwrap().get(&n) {
        return r.as_ref().clone();
    }
    let rule = Arc::new(build());
    map.lock().unwrap().insert(n, Arc::clone(&rule));
    rule.as_ref().clone()
}

/// Half-range Hermite rule for `∫_0^∞ f(s) e^{−s²} ds`.
pub fn half_range_hermite(n: usize) -> Result<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    if n == 0 || n > 100 {
        return Err(Error::InvalidArgument(format!("half-range Hermite order {n} outside 1..=100")));
    }
    Ok(cached(&CACHE, n, || {
        let (a, b) = half_range_recurrence(n);
        golub_welsch(&a, &b, 0.5 * PI.sqrt())
    }))
}

/// Symmetric rule for the standard normal built from the half-range rule,
/// exact on `|z|·poly(z)`: nodes `±√2 s_i`, weights `w_i/√π` each.
pub fn normal_rule_half_range(n: usize) -> Result<Vec<(f64, f64)>> {
    let half = half_range_hermite(n)?;
    let r2 = 2f64.sqrt();
    let rp = PI.sqrt();
    let mut out: Vec<(f64, f64)> = half.iter().flat_map(|&(s, w)| [(-r2 * s, w / rp), (r2 * s, w / rp)]).collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(out)
}

/// Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let a = vec![0.0; n];
    let b: Vec<f64> = (0..n).map(|k| if k == 0 { 2.0 } else { (k * k) as f64 / (4.0 * (k * k) as f64 - 1.0) }).collect();
    golub_welsch(&a, &b, 2.0)
}
