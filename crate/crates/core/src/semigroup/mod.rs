//! The heat semigroup on periodic grids and on radial measures.

pub mod grid;
pub mod radial;
pub mod timegrid;
pub mod uloc;

pub use grid::{
    apply_semigroup_grid, apply_semigroup_grid_on, enforce_positivity, heat_multiplier_1d, Domain,
    Geometry, GridField, Spectral, MAX_GRID_DIM,
};
pub use radial::{apply_semigroup_radial, gaussian, semigroup_radial_at, semigroup_radial_sup};
pub use timegrid::{DuhamelRule, TimeGrid};
pub use uloc::uloc_norm;

use crate::error::{Error, Result};
use crate::exponents::SystemParams;

/// Heat kernel `(4π D t)^{-N/2} exp(-|x|²/(4 D t))` in the dimension of `params`.
pub fn heat_kernel(params: &SystemParams, x_norm: f64, t: f64, diffusivity: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!(
            "heat kernel needs t > 0, got {t}"
        )));
    }
    if !(diffusivity > 0.0) || !(x_norm >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "heat kernel needs D > 0 and |x| >= 0, got D = {diffusivity}, |x| = {x_norm}"
        )));
    }
    Ok(gaussian(params.n, x_norm, diffusivity * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{half_line, Tolerance};
    use crate::special::sphere_area;
    use std::f64::consts::PI;

    #[test]
    fn kernel_examples() {
        let p = SystemParams::new(1, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert!((heat_kernel(&p, 0.0, 1.0 / (4.0 * PI), 1.0).unwrap() - 1.0).abs() < 1e-15);
        let v = heat_kernel(&p, 2.0, 1.0, 1.0).unwrap();
        assert!((v - (4.0 * PI).powf(-0.5) * (-1f64).exp()).abs() < 1e-15);
        assert!(heat_kernel(&p, 0.0, 0.0, 1.0).is_err());
        assert!(heat_kernel(&p, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_has_unit_mass() {
        for (n, t, d) in [(1, 0.3, 1.0), (2, 1e-3, 2.0), (3, 5.0, 0.5), (5, 0.1, 1.0)] {
            let p = SystemParams::new(n, 1.0, 2.0, d, d).unwrap();
            let q = half_line(
                |r| {
                    let g = heat_kernel(&p, r, t, d).unwrap();
                    if g == 0.0 {
                        0.0
                    } else {
                        sphere_area(n) * r.powi(n as i32 - 1) * g
                    }
                },
                0.0,
                Tolerance::rel(1e-13),
            )
            .unwrap();
            assert!((q.value() - 1.0).abs() < 1e-10, "n={n}: {}", q.value());
        }
    }
}
