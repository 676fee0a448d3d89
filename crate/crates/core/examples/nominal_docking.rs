//! Reference docking approach: 250 km circular orbit, twelve real poles.

use std::time::Instant;

use softdock::metrics::{compute_metrics, MetricOptions};
use softdock::sim::{run_closed_loop, ScenarioConfig};

fn main() -> softdock::Result<()> {
    let cfg = ScenarioConfig::reference();
    let start = Instant::now();
    let record = run_closed_loop(&cfg)?;
    let elapsed = start.elapsed();
    let m = compute_metrics(&record, &MetricOptions::default());

    println!("{:>4} {:>10} {:>9} {:>10} {:>10}", "", "overshoot", "crossings", "settle[s]", "peak");
    for c in &m.components {
        let settle = c.settling_time.map_or("-".to_string(), |t| format!("{t:.2}"));
        println!(
            "{:>4} {:>10.2e} {:>9} {:>10} {:>10.4}",
            c.name, c.overshoot, c.zero_crossings, settle, c.peak
        );
    }
    println!("max thrust          {:.3} N", m.max_thrust_n);
    println!("terminal |p|        {:.3e} m", m.terminal_position_norm);
    println!("terminal |qv|       {:.3e}", m.terminal_attitude_norm);
    println!("max Re eig          {:.6}", m.max_re_eig);
    println!("max eig error       {:.2e}", m.max_eigenvalue_error);
    println!("sup |A+BK|          {:.3}", m.sup_closed_loop_norm);
    println!("wall time           {:.2?}", elapsed);
    Ok(())
}
