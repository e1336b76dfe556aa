//! Shock detector values of every variant on a field with a kink and a peak.

use dmpfem::mesh::{ElementKind, Mesh2D, Rect};
use dmpfem::stabilization::{detectors, DetectorKind, StabParams};

fn main() -> dmpfem::Result<()> {
    let n = 8;
    let mesh = Mesh2D::build_structured(n, n, Rect::unit(), ElementKind::Q1)?;
    let u: Vec<f64> = mesh
        .coords()
        .iter()
        .map(|p| (p[0] - 0.5).abs() + if (p[0] - 0.25).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9 { 1.0 } else { 0.0 })
        .collect();
    for kind in [
        DetectorKind::Nonsmooth,
        DetectorKind::Simplified,
        DetectorKind::Smooth,
        DetectorKind::SimplifiedSmooth,
    ] {
        let params = StabParams { q: 2.0, eps: 1e-4, detector: kind, ..StabParams::default() };
        let alpha = detectors(&mesh, &u, &params);
        println!("{}:", kind.name());
        for iy in (0..=n).rev() {
            let row: Vec<String> = (0..=n).map(|ix| format!("{:.2}", alpha[iy * (n + 1) + ix])).collect();
            println!("  {}", row.join(" "));
        }
    }
    Ok(())
}
