//! Transfer of radial data onto a periodic grid.

use crate::error::{Error, Result};
use crate::semigroup::GridField;
use crate::special::ball_volume;

use super::ball::origin_ball_measure;
use super::RadialDensity;

/// Sample `profile` on `[-L, L)^N` with `M` points per axis.
///
/// Cells away from the origin take the midpoint value. The origin cell takes
/// the mass of the ball with the cell's volume, and its `3^N - 1` neighbours
/// share the mass of the next shell (out to the volume of the `3^N` block) in
/// proportion to their midpoint values. A point mass becomes `m / h^N` in
/// the origin cell.
pub fn sample_to_grid(
    profile: &dyn RadialDensity,
    halfwidth: f64,
    points: usize,
) -> Result<GridField> {
    let n = profile.dim();
    if !profile.locally_finite() {
        return Err(Error::InfiniteMass(
            "cannot sample a profile that is not locally integrable".into(),
        ));
    }
    let mut field = GridField::from_fn(n, points, halfwidth, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            0.0
        } else {
            profile.value(r)
        }
    })?;
    let cell = field.cell_volume();
    let r_inner = (cell / ball_volume(n)).powf(1.0 / n as f64);
    let r_outer = (3f64.powi(n as i32) * cell / ball_volume(n)).powf(1.0 / n as f64);
    let inner = origin_ball_measure(profile, r_inner)?;
    let shell = origin_ball_measure(profile, r_outer)? - inner;

    let centre = points / 2;
    let mut neighbours = Vec::new();
    for flat in 0..3usize.pow(n as u32) {
        let mut rem = flat;
        let mut idx = 0usize;
        let mut is_centre = true;
        for _ in 0..n {
            let off = rem % 3;
            rem /= 3;
            if off != 1 {
                is_centre = false;
            }
            idx = idx * points + (centre + off - 1);
        }
        if !is_centre {
            neighbours.push(idx);
        }
    }
    let weight_total: f64 = neighbours.iter().map(|&i| field.values[i]).sum();
    for &i in &neighbours {
        let share = if weight_total > 0.0 {
            field.values[i] / weight_total
        } else {
            1.0 / neighbours.len() as f64
        };
        field.values[i] = shell.max(0.0) * share / cell;
    }
    let origin = field.origin_index();
    field.values[origin] = (inner + profile.atom()) / cell;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{ball_measure, RadialProfile};

    #[test]
    fn constant_profile_fills_grid() {
        for n in 1..=3 {
            let c = RadialProfile::constant(n, 1.7).unwrap();
            let f = sample_to_grid(&c, 2.0, 16).unwrap();
            assert!(f.values.iter().all(|v| (v - 1.7).abs() < 1e-9), "n={n}");
        }
    }

    #[test]
    fn zero_profile_gives_zero_field() {
        let f = sample_to_grid(&RadialProfile::zero(2), 1.0, 8).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singular_profile_mass_matches_quadrature() {
        // one-dimensional analogue of borderline singular data
        let mu = RadialProfile::power_law(1, 1.0, 0.5).unwrap();
        let f = sample_to_grid(&mu, 2.0, 1024).unwrap();
        let exact = ball_measure(&mu, 0.0, 1.0).unwrap();
        assert!(
            (f.mass() / exact - 1.0).abs() < 5e-3,
            "{} vs {exact}",
            f.mass()
        );
    }

    #[test]
    fn atom_goes_to_origin_cell() {
        let a = RadialProfile::point_mass(2, 3.0).unwrap();
        let f = sample_to_grid(&a, 1.0, 8).unwrap();
        assert!((f.mass() - 3.0).abs() < 1e-12);
        assert!(f.values[f.origin_index()] > 0.0);
    }

    #[test]
    fn non_integrable_is_refused() {
        let mu = RadialProfile::power_law(2, 1.0, 2.5).unwrap();
        assert!(sample_to_grid(&mu, 1.0, 8).is_err());
    }
}
