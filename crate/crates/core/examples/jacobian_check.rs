//! Compares the analytic Jacobian of the stabilized residual with central
//! differences.

use std::sync::Arc;

use dmpfem::assembly::{BurgersVelocity, LinearVelocity, Velocity};
use dmpfem::mesh::{ElementKind, Mesh2D, Rect};
use dmpfem::residual::{NonlinearSystem, TransportSystem};
use dmpfem::stabilization::{DetectorKind, StabParams};

fn worst_mismatch(sys: &TransportSystem, u: &[f64]) -> dmpfem::Result<f64> {
    let j = sys.jacobian(u)?;
    let floor = 1e-3 * j.max_abs();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..u.len() {
        let (mut up, mut um) = (u.to_vec(), u.to_vec());
        up[k] += h;
        um[k] -= h;
        let (tp, tm) = (sys.residual(&up)?, sys.residual(&um)?);
        for i in 0..u.len() {
            let fd = (tp[i] - tm[i]) / (2.0 * h);
            let an = j.get(i, k);
            worst = worst.max((fd - an).abs() / an.abs().max(floor));
        }
    }
    Ok(worst)
}

fn main() -> dmpfem::Result<()> {
    let mesh = Arc::new(Mesh2D::build_structured(8, 8, Rect::unit(), ElementKind::Q1)?);
    let params = StabParams { q: 4.0, eps: 1e-2, sigma: 1e-6, gamma: 1e-8, detector: DetectorKind::Smooth, ..StabParams::default() };
    let u: Vec<f64> = mesh.coords().iter().map(|p| (6.0 * p[0]).sin() * (3.0 * p[1]).cos()).collect();
    let velocities: [(&str, Velocity); 2] = [
        ("rotation", Arc::new(LinearVelocity::new(|p| [0.5 - p[1], p[0] - 0.5]))),
        ("burgers", Arc::new(BurgersVelocity::default())),
    ];
    for (name, vel) in velocities {
        let mut sys = TransportSystem::new(mesh.clone(), vel, params);
        sys.set_time_step(&u, 0.01)?;
        println!("{name}: max relative mismatch {:.2e}", worst_mismatch(&sys, &u)?);
    }
    Ok(())
}
