//! Robustness study: 100 plants with random inertia and lever-arm errors plus
//! actuation disturbances, all flown with the nominal controller.

use std::time::Instant;

use softdock::montecarlo::{monte_carlo, MonteCarloOptions};
use softdock::sim::{PerturbationSpec, ScenarioConfig};

fn main() -> softdock::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let cfg = ScenarioConfig::reference();
    let start = Instant::now();
    let ens = monte_carlo(&cfg, &PerturbationSpec::reference(), runs, 2024, &MonteCarloOptions::default())?;
    let s = &ens.summary;
    println!("converged           {}/{}", s.converged_count, s.runs);
    println!("worst terminal |p|  {:.3e} m", s.max_terminal_position);
    println!("worst terminal |qv| {:.3e}", s.max_terminal_attitude);
    println!("max thrust          {:.3} N", s.max_thrust_n);
    println!("median kappa        {:.3}", s.median_kappa);
    if let Some(k) = s.median_kappa_random {
        println!("median kappa (rand) {k:.3}");
    }
    let n = s.position_envelope.t.len();
    for i in (0..n).step_by(100) {
        println!(
            "t={:>5.1}  |p| p50 {:>9.3e} p95 {:>9.3e}   |qv| p50 {:>9.3e} p95 {:>9.3e}",
            s.position_envelope.t[i],
            s.position_envelope.p50[i],
            s.position_envelope.p95[i],
            s.attitude_envelope.p50[i],
            s.attitude_envelope.p95[i]
        );
    }
    println!("wall time           {:.2?}", start.elapsed());
    Ok(())
}
