//! Small dense helpers not covered by nalgebra's decompositions.

use nalgebra::{Complex, DMatrix};

/// Householder QR returning the full square `Q` (n×n) and `R` (n×m).
///
/// nalgebra's `QR` only exposes the thin factor, but the pole assignment needs
/// the orthogonal complement of the column space as well.
pub fn full_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = a.shape();
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    for k in 0..m.min(n.saturating_sub(1)) {
        let x = r.view((k, k), (n - k, 1)).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v /= vnorm;

        let mut block = r.view_mut((k, 0), (n - k, m));
        let proj = v.transpose() * &block;
        block -= &v * proj * 2.0;

        let mut qblock = q.view_mut((0, k), (n, n - k));
        let proj = &qblock * &v;
        qblock -= proj * v.transpose() * 2.0;
    }
    (q, r)
}

/// `log|det(a)|` and the sign of the determinant, via LU.
pub fn log_abs_det(a: &DMatrix<f64>) -> (f64, f64) {
    let lu = a.clone().lu();
    let mut sign: f64 = lu.p().determinant();
    let mut log = 0.0;
    for d in lu.u().diagonal().iter() {
        if *d == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        log += d.abs().ln();
        sign *= d.signum();
    }
    (log, sign)
}

/// 2-norm condition number `σ₁/σ_n`; infinite for singular input.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().max()
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    a.complex_eigenvalues().iter().copied().collect()
}

/// Largest distance between the spectrum of `a` and the real `targets`, pairing
/// both after sorting by real part.
pub fn eigenvalue_error(a: &DMatrix<f64>, targets: &[f64]) -> f64 {
    let mut eig = eigenvalues(a);
    eig.sort_by(|x, y| x.re.total_cmp(&y.re));
    let mut t = targets.to_vec();
    t.sort_by(f64::total_cmp);
    if eig.len() != t.len() {
        return f64::INFINITY;
    }
    eig.iter()
        .zip(&t)
        .map(|(e, &l)| (e - Complex::new(l, 0.0)).norm())
        .fold(0.0, f64::max)
}
