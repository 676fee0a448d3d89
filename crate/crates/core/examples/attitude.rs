//! Relative attitude between two spacecraft and its reduced-quaternion form.

use nalgebra::Vector3;
use softdock::attitude::{
    kinematics_matrix, relative_angular_velocity, relative_quaternion, Quaternion, ReducedQuaternion,
};

fn main() -> softdock::Result<()> {
    let q_i_cb = Quaternion::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.8);
    let q_i_tb = Quaternion::from_axis_angle(&Vector3::z(), -0.3);
    let q = relative_quaternion(&q_i_cb, &q_i_tb);
    println!("relative quaternion   {:?}", q.to_array());
    println!("norm                  {:.16}", q.norm());

    let reduced = ReducedQuaternion::from_quaternion(&q)?;
    println!("reduced vector part   {:?}", reduced.vector().as_slice());
    println!("recovered scalar      {:.16}", reduced.scalar());

    let rotation = q.rotation_matrix();
    let w = relative_angular_velocity(&Vector3::new(0.01, 0.0, 0.02), &Vector3::new(0.0, 0.0, 0.005), &rotation);
    let q_dot = 0.5 * kinematics_matrix(reduced.vector())? * w;
    println!("relative rate         {:?}", w.as_slice());
    println!("vector-part rate      {:?}", q_dot.as_slice());

    // a quaternion with negative scalar part maps to its shadow
    let shadow = ReducedQuaternion::from_quaternion(&Quaternion::new(-0.6, 0.8, 0.0, 0.0))?;
    println!("shadow of [-0.6,0.8,0,0] {:?}", shadow.vector().as_slice());
    Ok(())
}
