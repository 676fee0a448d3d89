//! Thruster allocation: which thruster forces cancel a given force and torque.

use nalgebra::Vector3;
use softdock::allocation::AllocationConfig;

fn main() -> softdock::Result<()> {
    let alloc = AllocationConfig::new(2.0, 2.0, 2.0)?;
    println!("force map F_a\n{}", alloc.force_map);
    println!("torque map T_a\n{}", alloc.torque_map);

    let n_t = Vector3::new(1.0, 0.0, 0.0);
    let n_r = Vector3::new(0.0, 0.5, -0.2);
    let u1 = alloc.feedforward(&n_t, &n_r);
    let (f, t) = alloc.wrench(&u1);
    println!("thruster forces {:?}", u1.as_slice());
    println!("force error  {:.2e}", (f - n_t).norm());
    println!("torque error {:.2e}", (t - n_r).norm());
    Ok(())
}
