//! Target orbit propagation for a circular and an elliptic orbit.

use softdock::orbit::{propagate_target, solve_kepler, OrbitElements, MU_EARTH};

fn main() -> softdock::Result<()> {
    let circular = OrbitElements::circular(6_621_000.0);
    println!("circular period {:.1} s", circular.period());
    for t in [0.0, 600.0, 1800.0] {
        let s = propagate_target(&circular, t)?;
        println!("t={t:>6.0}  r_t={:.1} m  gamma={:.6} rad  gamma_dot={:.6e} rad/s", s.r_t, s.gamma, s.gamma_dot);
    }

    let elliptic = OrbitElements {
        semi_major_axis: 7_000_000.0,
        eccentricity: 0.1,
        true_anomaly_0: 0.0,
        mu: MU_EARTH,
    };
    for t in [0.0, 1000.0, 2000.0, 3000.0] {
        let s = propagate_target(&elliptic, t)?;
        println!(
            "t={t:>6.0}  r_t={:.1} m  gamma={:.6}  gamma_dot={:.6e}  gamma_ddot={:.3e}",
            s.r_t, s.gamma, s.gamma_dot, s.gamma_ddot
        );
    }

    let e = solve_kepler(1.0, 0.9)?;
    println!("E for M=1, e=0.9: {e:.12} (residual {:.1e})", e - 0.9 * e.sin() - 1.0);
    Ok(())
}
