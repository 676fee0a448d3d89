//! Robust pole assignment on a random multi-input system, compared against
//! random admissible eigenvector choices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softdock::linalg::{condition_number, eigenvalue_error, log_abs_det};
use softdock::robpole::{random_selection, PoleSet, RobustPoleAssigner, SelectionOptions};

fn main() -> softdock::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n, m) = (8, 3);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let poles = PoleSet::new((0..n).map(|i| -0.5 - 0.3 * i as f64).collect())?;

    let assigner = RobustPoleAssigner::new(b.clone(), SelectionOptions::default())?;
    let gain = assigner.assign(&a, &poles)?;
    println!("sweeps            {}", gain.sweeps());
    println!("log|det X| trace  {:?}", gain.log_det_history);
    println!("kappa(X)          {:.3}", gain.kappa);
    println!("residual          {:.2e}", gain.residual);
    println!("eigenvalue error  {:.2e}", eigenvalue_error(&(&a + &b * &gain.k), poles.as_slice()));

    let subspaces = assigner.subspaces(&a, &poles)?;
    let (mut best_det, mut best_kappa) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..100 {
        let x = random_selection(&subspaces, &mut rng);
        best_det = best_det.max(log_abs_det(&x).0);
        best_kappa = best_kappa.min(condition_number(&x));
    }
    println!("best of 100 random: log|det X| {best_det:.4}, kappa {best_kappa:.3}");
    Ok(())
}
