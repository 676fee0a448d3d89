//! Effect of scaling every closed-loop pole on settling time and peak thrust.

use softdock::metrics::{compute_metrics, MetricOptions};
use softdock::sim::{run_closed_loop, ScenarioConfig};

const POSITION: [&str; 3] = ["px", "py", "pz"];
const ATTITUDE: [&str; 3] = ["q1", "q2", "q3"];

fn main() -> softdock::Result<()> {
    let base = ScenarioConfig::reference();
    println!("{:>6} {:>12} {:>12} {:>12}", "scale", "settle p [s]", "settle q [s]", "max f [N]");
    for scale in [0.75, 1.0, 1.5, 2.0] {
        let mut cfg = base.clone();
        cfg.controller.poles = base.controller.poles.scaled(scale)?;
        let m = compute_metrics(&run_closed_loop(&cfg)?, &MetricOptions::default());
        let fmt = |t: Option<f64>| t.map_or("-".into(), |t| format!("{t:.2}"));
        println!(
            "{scale:>6.2} {:>12} {:>12} {:>12.3}",
            fmt(m.settling_time(&POSITION)),
            fmt(m.settling_time(&ATTITUDE)),
            m.max_thrust_n
        );
    }
    Ok(())
}
