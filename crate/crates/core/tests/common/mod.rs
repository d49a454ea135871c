//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use richards_rbf::constitutive::SoilParams;

/// Adaptive Simpson quadrature with Richardson correction, to a tolerance
/// relative to the first estimate.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, tol, 24)
}

/// `∫_{+∞}^{h} k_r(s) ds` by quadrature, with `k_r` written out from the
/// Brooks–Corey power law. The unsaturated tail is integrated in
/// `y = ln(s/h_cap)`, where the integrand is `h_cap·e^{(1−m)y}`.
pub fn kirchhoff_by_quadrature(soil: &SoilParams, h: f64) -> f64 {
    let (hc, m) = (soil.h_cap(), soil.m());
    let kr = |s: f64| if s <= hc { 1.0 } else { (s / hc).powf(-m) };
    let y0 = (h.max(hc) / hc).ln();
    let y1 = y0 + 45.0 / (m - 1.0);
    let g = |y: f64| {
        let s = hc * y.exp();
        kr(s) * s
    };
    // split the exponential decay into pieces of one e-fold each
    let pieces = 90;
    let mut tail = 0.0;
    for k in 0..pieces {
        let a = y0 + (y1 - y0) * k as f64 / pieces as f64;
        let b = y0 + (y1 - y0) * (k + 1) as f64 / pieces as f64;
        tail += adaptive_simpson(&g, a, b, 1e-14);
    }
    let saturated = if h < hc { hc - h } else { 0.0 };
    -(tail + saturated)
}

/// Indices of the `n_s` nodes closest to `center`, by full sort. Distances
/// within a relative 1e-9 count as ties and go to the lower index.
pub fn brute_force_knn(coords: &[[f64; 2]], center: usize, n_s: usize) -> Vec<usize> {
    let c = coords[center];
    let mut all: Vec<(f64, usize)> = coords
        .iter()
        .enumerate()
        .map(|(i, p)| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut grouped: Vec<(f64, usize)> = Vec::with_capacity(all.len());
    let mut i = 0;
    while i < all.len() {
        let start = all[i].0;
        let mut j = i;
        while j < all.len() && all[j].0 - start <= 1e-9 * start.max(f64::MIN_POSITIVE) {
            j += 1;
        }
        let mut run = all[i..j].to_vec();
        run.sort_by_key(|e| e.1);
        grouped.extend(run);
        i = j;
    }
    // the centre is at distance zero and always first
    grouped.iter().take(n_s).map(|e| e.1).collect()
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(matrix: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut b = rhs.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        let piv = a[k][k];
        assert!(piv != 0.0, "singular matrix");
        for i in k + 1..n {
            let f = a[i][k] / piv;
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Central difference with one Richardson step:
/// `(4·D(h/2) − D(h)) / 3`, fourth-order accurate.
pub fn derivative(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

pub fn rel_err(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(f64::MIN_POSITIVE)
}
