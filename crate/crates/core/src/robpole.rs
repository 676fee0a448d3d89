//! Robust pole assignment for distinct real poles.
//!
//! Given `(A, B)` and a pole set `Λ`, find unit eigenvectors `x_i` in the
//! admissible subspaces `S_i = {s : Q1ᵀ(A − λ_i I)s = 0}` that maximize
//! `|det X|`, then form `K = R⁻¹ Q0ᵀ (X Λ X⁻¹ − A)` so that `(A + BK) X = X Λ`.
//!
//! The eigenvector selection is cyclic: each column in turn is replaced by the
//! unit vector of its subspace that maximizes `|det X|` with the other columns
//! held fixed. That vector is the normalized projection onto `S_i` of the
//! normal to the hyperplane spanned by the remaining columns, so `|det X|` can
//! only grow.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, full_qr, log_abs_det};

/// Threshold on `|R_ii| / max|R|` below which a triangular factor counts as rank deficient.
const RANK_TOL: f64 = 1e-10;
/// Largest acceptable condition number of the eigenvector matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Distinct, strictly negative real closed-loop poles (1/s).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleSet(Vec<f64>);

impl PoleSet {
    pub fn new(poles: Vec<f64>) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::InvalidPoles("pole set is empty".into()));
        }
        if let Some(p) = poles.iter().find(|p| !p.is_finite() || **p >= 0.0) {
            return Err(Error::InvalidPoles(format!(
                "pole {p} is not strictly negative"
            )));
        }
        let mut sorted = poles.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted
            .windows(2)
            .find(|w| (w[1] - w[0]).abs() <= 1e-12 * w[0].abs().max(1.0))
        {
            return Err(Error::InvalidPoles(format!("pole {} is repeated", w[0])));
        }
        Ok(Self(poles))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Slowest pole, i.e. the largest real part.
    pub fn slowest(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|p| p * factor).collect())
    }

    pub fn diagonal(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.0))
    }
}

/// Cyclic-sweep controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionOptions {
    pub max_sweeps: usize,
    /// Stop once a sweep improves `|det X|` by less than this relative amount.
    pub tolerance: f64,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 10,
            tolerance: 1e-6,
        }
    }
}

/// `B = [Q0 Q1] [R; 0]`.
#[derive(Debug, Clone)]
pub struct InputFactorization {
    pub q0: DMatrix<f64>,
    pub q1: DMatrix<f64>,
    pub r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
}

pub fn decompose_input_matrix(b: &DMatrix<f64>) -> Result<InputFactorization> {
    let (n, m) = b.shape();
    if m == 0 || m > n {
        return Err(Error::RankDeficientInput {
            rank: m.min(n),
            columns: m,
        });
    }
    let (q, r_full) = full_qr(b);
    let r = r_full.rows(0, m).clone_owned();
    let scale = r.amax();
    let rank = (0..m)
        .filter(|&i| scale > 0.0 && r[(i, i)].abs() > RANK_TOL * scale)
        .count();
    if rank < m {
        return Err(Error::RankDeficientInput { rank, columns: m });
    }
    let r_inv = r
        .clone()
        .solve_upper_triangular(&DMatrix::identity(m, m))
        .ok_or(Error::RankDeficientInput { rank, columns: m })?;
    Ok(InputFactorization {
        q0: q.columns(0, m).clone_owned(),
        q1: q.columns(m, n - m).clone_owned(),
        r,
        r_inv,
    })
}

/// Orthonormal basis (n×m) of the eigenvectors admissible for pole `lambda`.
pub fn candidate_subspace(a: &DMatrix<f64>, lambda: f64, q1: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let k = q1.ncols();
    if k == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let shifted = a.transpose() - DMatrix::<f64>::identity(n, n) * lambda;
    let (v, y) = full_qr(&(shifted * q1));
    let scale = y.amax();
    let deficient = (0..k).any(|i| !(y[(i, i)].abs() > RANK_TOL * scale.max(1.0)));
    if deficient {
        return Err(Error::AssignmentInfeasible { pole: lambda });
    }
    Ok(v.columns(k, n - k).clone_owned())
}

/// Result of the cyclic eigenvector selection.
#[derive(Debug, Clone)]
pub struct Selection {
    pub x: DMatrix<f64>,
    /// `log|det X|` at initialization and after every sweep.
    pub log_det_history: Vec<f64>,
}

impl Selection {
    pub fn sweeps(&self) -> usize {
        self.log_det_history.len() - 1
    }
}

/// Unit normal to the span of all columns of `x` except `skip`.
fn normal_excluding(x: &DMatrix<f64>, skip: usize) -> DVector<f64> {
    let n = x.nrows();
    let others = x.clone().remove_column(skip);
    let (q, _) = full_qr(&others);
    q.column(n - 1).clone_owned()
}

/// Initial matrix: first basis vector of every subspace.
fn initial_selection(subspaces: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = subspaces.len();
    DMatrix::from_fn(n, n, |i, j| subspaces[j][(i, 0)])
}

/// One pass over all columns; returns the new `log|det X|`.
fn sweep(x: &mut DMatrix<f64>, subspaces: &[DMatrix<f64>]) -> f64 {
    for (i, basis) in subspaces.iter().enumerate() {
        let y = normal_excluding(x, i);
        let proj = basis * (basis.transpose() * &y);
        let norm = proj.norm();
        if norm <= f64::EPSILON {
            continue;
        }
        let mut col = proj / norm;
        if col.dot(&x.column(i)) < 0.0 {
            col = -col;
        }
        x.set_column(i, &col);
    }
    log_abs_det(x).0
}

/// Cyclic maximization of `|det X|` over unit columns `x_i ∈ span(subspaces[i])`.
pub fn select_eigenvectors(subspaces: &[DMatrix<f64>], options: &SelectionOptions) -> Result<Selection> {
    let n = subspaces.len();
    if n == 0 || subspaces.iter().any(|s| s.nrows() != n || s.ncols() == 0) {
        return Err(Error::InvalidParameter {
            name: "subspaces",
            reason: format!("need {n} bases with {n} rows and at least one column"),
        });
    }
    let mut x = initial_selection(subspaces);
    let mut history = vec![log_abs_det(&x).0];
    let threshold = options.tolerance.ln_1p();
    for _ in 0..options.max_sweeps {
        let before = *history.last().unwrap();
        let after = sweep(&mut x, subspaces);
        history.push(after);
        if before.is_finite() && after - before < threshold {
            break;
        }
    }
    if !history.last().unwrap().is_finite() {
        return Err(Error::DegenerateSelection);
    }
    Ok(Selection {
        x,
        log_det_history: history,
    })
}

/// A uniformly drawn admissible eigenvector matrix, used as a baseline.
pub fn random_selection<R: Rng + ?Sized>(subspaces: &[DMatrix<f64>], rng: &mut R) -> DMatrix<f64> {
    let n = subspaces.len();
    let mut x = DMatrix::zeros(n, n);
    for (j, basis) in subspaces.iter().enumerate() {
        loop {
            let c = DVector::from_fn(basis.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let v = basis * c;
            let norm = v.norm();
            if norm > 1e-12 {
                x.set_column(j, &(v / norm));
                break;
            }
        }
    }
    x
}

/// `K = R⁻¹ Q0ᵀ (X Λ X⁻¹ − A)`.
pub fn compute_gain(
    a: &DMatrix<f64>,
    factorization: &InputFactorization,
    x: &DMatrix<f64>,
    poles: &PoleSet,
) -> Result<DMatrix<f64>> {
    let condition = condition_number(x);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let x_inv = x
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { condition })?;
    let target = x * poles.diagonal() * x_inv;
    Ok(&factorization.r_inv * factorization.q0.transpose() * (target - a))
}

/// Gain and eigenstructure diagnostics from one assignment.
#[derive(Debug, Clone)]
pub struct GainResult {
    pub k: DMatrix<f64>,
    pub x: DMatrix<f64>,
    /// `|det X|`
    pub det_x: f64,
    pub log_det_x: f64,
    /// `σ₁/σ_n` of `X`
    pub kappa: f64,
    /// `‖(A+BK)X − XΛ‖_F / (‖A‖_F + ‖BK‖_F)`
    pub residual: f64,
    pub log_det_history: Vec<f64>,
}

impl GainResult {
    pub fn sweeps(&self) -> usize {
        self.log_det_history.len().saturating_sub(1)
    }
}

/// Pole assignment for a fixed input matrix, factorized once up front.
#[derive(Debug, Clone)]
pub struct RobustPoleAssigner {
    b: DMatrix<f64>,
    factorization: InputFactorization,
    pub options: SelectionOptions,
}

impl RobustPoleAssigner {
    pub fn new(b: DMatrix<f64>, options: SelectionOptions) -> Result<Self> {
        let factorization = decompose_input_matrix(&b)?;
        Ok(Self {
            b,
            factorization,
            options,
        })
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn factorization(&self) -> &InputFactorization {
        &self.factorization
    }

    fn check_dims(&self, a: &DMatrix<f64>, poles: &PoleSet) -> Result<()> {
        let n = self.b.nrows();
        if a.shape() != (n, n) || poles.len() != n {
            return Err(Error::InvalidParameter {
                name: "A",
                reason: format!(
                    "expected {n}×{n} state matrix and {n} poles, got {:?} and {}",
                    a.shape(),
                    poles.len()
                ),
            });
        }
        Ok(())
    }

    pub fn subspaces(&self, a: &DMatrix<f64>, poles: &PoleSet) -> Result<Vec<DMatrix<f64>>> {
        self.check_dims(a, poles)?;
        poles
            .as_slice()
            .iter()
            .map(|&l| candidate_subspace(a, l, &self.factorization.q1))
            .collect()
    }

    pub fn assign(&self, a: &DMatrix<f64>, poles: &PoleSet) -> Result<GainResult> {
        let subspaces = self.subspaces(a, poles)?;
        let selection = select_eigenvectors(&subspaces, &self.options)?;
        self.finish(a, poles, selection.x, selection.log_det_history)
    }

    /// Gain for a caller-chosen admissible eigenvector matrix.
    pub fn gain_for(&self, a: &DMatrix<f64>, poles: &PoleSet, x: DMatrix<f64>) -> Result<GainResult> {
        self.check_dims(a, poles)?;
        let log_det = log_abs_det(&x).0;
        self.finish(a, poles, x, vec![log_det])
    }

    fn finish(
        &self,
        a: &DMatrix<f64>,
        poles: &PoleSet,
        x: DMatrix<f64>,
        history: Vec<f64>,
    ) -> Result<GainResult> {
        let k = compute_gain(a, &self.factorization, &x, poles)?;
        let bk = &self.b * &k;
        let residual = ((a + &bk) * &x - &x * poles.diagonal()).norm() / (a.norm() + bk.norm()).max(f64::MIN_POSITIVE);
        let (log_det_x, _) = log_abs_det(&x);
        Ok(GainResult {
            kappa: condition_number(&x),
            det_x: log_det_x.exp(),
            log_det_x,
            residual,
            log_det_history: history,
            k,
            x,
        })
    }
}

/// One-shot assignment: factorizes `B`, then assigns.
pub fn assign_poles(a: &DMatrix<f64>, b: &DMatrix<f64>, poles: &PoleSet) -> Result<GainResult> {
    RobustPoleAssigner::new(b.clone(), SelectionOptions::default())?.assign(a, poles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalue_error;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_poles(rng: &mut ChaCha8Rng, n: usize) -> PoleSet {
        let mut poles: Vec<f64> = (0..n).map(|i| -0.5 - 0.4 * i as f64 - rng.random_range(0.0..0.2)).collect();
        poles.reverse();
        PoleSet::new(poles).unwrap()
    }

    #[test]
    fn pole_set_validation() {
        assert!(PoleSet::new(vec![-1.0, -2.0]).is_ok());
        assert!(PoleSet::new(vec![-1.0, 0.0]).is_err());
        assert!(PoleSet::new(vec![-1.0, -1.0]).is_err());
        assert!(PoleSet::new(vec![]).is_err());
        assert!(PoleSet::new(vec![-1.0, f64::NAN]).is_err());
    }

    #[test]
    fn factorization_of_unit_column() {
        let f = decompose_input_matrix(&dmatrix![0.0; 1.0]).unwrap();
        assert_abs_diff_eq!(f.q0[(0, 0)].abs(), 0.0);
        assert_abs_diff_eq!(f.q0[(1, 0)].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.q1[(0, 0)].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.r[(0, 0)].abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn factorization_of_square_input_has_empty_complement() {
        let f = decompose_input_matrix(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(f.q1.ncols(), 0);
        let s = candidate_subspace(&DMatrix::zeros(3, 3), -1.0, &f.q1).unwrap();
        assert_eq!(s, DMatrix::identity(3, 3));
    }

    #[test]
    fn factorization_identity_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let b = random_matrix(&mut rng, 7, 3);
            let f = decompose_input_matrix(&b).unwrap();
            assert!((&b - &f.q0 * &f.r).norm() < 1e-12);
            assert!((f.q1.transpose() * &b).norm() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_input_is_rejected() {
        let b = dmatrix![1.0, 2.0; 2.0, 4.0; 0.0, 0.0];
        assert!(matches!(
            decompose_input_matrix(&b),
            Err(Error::RankDeficientInput { rank: 1, columns: 2 })
        ));
    }

    #[test]
    fn subspace_for_zero_dynamics() {
        let f = decompose_input_matrix(&dmatrix![0.0; 1.0]).unwrap();
        let s = candidate_subspace(&DMatrix::zeros(2, 2), -0.7, &f.q1).unwrap();
        assert_eq!(s.ncols(), 1);
        assert_abs_diff_eq!(s[(0, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[(1, 0)].abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn subspace_defining_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let (n, m) = (rng.random_range(3..10), rng.random_range(1..3));
            let a = random_matrix(&mut rng, n, n);
            let b = random_matrix(&mut rng, n, m);
            let f = decompose_input_matrix(&b).unwrap();
            let lambda = -rng.random_range(0.1..3.0);
            let s = candidate_subspace(&a, lambda, &f.q1).unwrap();
            assert_eq!(s.shape(), (n, m));
            let shifted = &a - DMatrix::<f64>::identity(n, n) * lambda;
            assert!((f.q1.transpose() * shifted * &s).norm() < 1e-10);
            assert!((s.transpose() * &s - DMatrix::<f64>::identity(m, m)).norm() < 1e-12);
        }
    }

    #[test]
    fn uncontrollable_mode_is_infeasible() {
        // x1 is decoupled from the input and has eigenvalue −1
        let a = dmatrix![-1.0, 0.0; 0.0, 0.0];
        let f = decompose_input_matrix(&dmatrix![0.0; 1.0]).unwrap();
        assert!(matches!(
            candidate_subspace(&a, -1.0, &f.q1),
            Err(Error::AssignmentInfeasible { .. })
        ));
    }

    #[test]
    fn one_dimensional_subspaces_give_identity() {
        let s1 = dmatrix![1.0; 0.0];
        let s2 = dmatrix![0.0; 1.0];
        let sel = select_eigenvectors(&[s1, s2], &SelectionOptions::default()).unwrap();
        assert_eq!(sel.x, DMatrix::identity(2, 2));
        assert_eq!(sel.log_det_history.last().copied(), Some(0.0));
    }

    #[test]
    fn unconstrained_selection_is_orthogonal() {
        let bases = vec![DMatrix::identity(4, 4); 4];
        let sel = select_eigenvectors(&bases, &SelectionOptions::default()).unwrap();
        assert!((sel.x.transpose() * &sel.x - DMatrix::<f64>::identity(4, 4)).norm() < 1e-12);
        assert_abs_diff_eq!(sel.log_det_history.last().unwrap().exp(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn double_integrator_gain() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        let b = dmatrix![0.0; 1.0];
        let res = assign_poles(&a, &b, &PoleSet::new(vec![-1.0, -2.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(res.k, dmatrix![-2.0, -3.0], epsilon = 1e-12);
        assert!(res.residual < 1e-12);
    }

    #[test]
    fn already_placed_modes_need_no_feedback() {
        let a = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let b = dmatrix![1.0; 1.0];
        let res = assign_poles(&a, &b, &PoleSet::new(vec![-1.0, -2.0]).unwrap()).unwrap();
        assert!((&b * &res.k * &res.x).norm() < 1e-12);
    }

    #[test]
    fn unconstrained_gain() {
        let a = dmatrix![0.3, -1.2; 2.0, 0.5];
        let poles = PoleSet::new(vec![-1.0, -3.0]).unwrap();
        let res = assign_poles(&a, &DMatrix::identity(2, 2), &poles).unwrap();
        let expected = &res.x * poles.diagonal() * res.x.transpose() - &a;
        assert_abs_diff_eq!(res.k, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(res.kappa, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ill_conditioned_selection_is_rejected() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        let f = decompose_input_matrix(&dmatrix![0.0; 1.0]).unwrap();
        let x = dmatrix![1.0, 1.0; 0.0, 1e-14];
        assert!(matches!(
            compute_gain(&a, &f, &x, &PoleSet::new(vec![-1.0, -2.0]).unwrap()),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn random_systems_assign_and_sweeps_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.random_range(3..9);
            let m = rng.random_range(1..n.min(4));
            let a = random_matrix(&mut rng, n, n);
            let b = random_matrix(&mut rng, n, m);
            let poles = random_poles(&mut rng, n);
            let res = assign_poles(&a, &b, &poles).unwrap();
            assert!(res.residual < 1e-8, "residual {}", res.residual);
            let acl = &a + &b * &res.k;
            let err = eigenvalue_error(&acl, poles.as_slice());
            // Bauer-Fike: the computed spectrum of A+BK moves by up to κ·ε·‖A+BK‖
            let bound = 1e-6f64.max(res.kappa * 1e-13 * acl.norm());
            assert!(err < bound, "n={n} m={m} err={err} kappa={}", res.kappa);
            for w in res.log_det_history.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()), "{:?}", res.log_det_history);
            }
            for col in res.x.column_iter() {
                assert_abs_diff_eq!(col.norm(), 1.0, epsilon = 1e-12);
            }
            assert!(res.kappa >= 1.0);
        }
    }

    #[test]
    fn sweeps_beat_initial_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let a = random_matrix(&mut rng, 6, 6);
            let b = random_matrix(&mut rng, 6, 2);
            let poles = random_poles(&mut rng, 6);
            let assigner = RobustPoleAssigner::new(b, SelectionOptions::default()).unwrap();
            let subspaces = assigner.subspaces(&a, &poles).unwrap();
            let one = select_eigenvectors(&subspaces, &SelectionOptions { max_sweeps: 1, tolerance: 0.0 }).unwrap();
            let full = select_eigenvectors(&subspaces, &SelectionOptions::default()).unwrap();
            assert!(full.log_det_history.last() >= one.log_det_history.last());
        }
    }
}
