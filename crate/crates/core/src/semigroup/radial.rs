//! Heat flow of radial measures by one-dimensional quadrature in the radius.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profiles::RadialDensity;
use crate::quadrature::{convergent_half_line, gauss_kronrod_pieces, Tolerance};
use crate::special::{scaled_bessel_i, sphere_area};

/// `(4π D t)^{-N/2} exp(-|x|²/(4 D t))`.
pub fn gaussian(n: usize, x_norm: f64, dt: f64) -> f64 {
    (4.0 * PI * dt).powf(-(n as f64) / 2.0) * (-x_norm * x_norm / (4.0 * dt)).exp()
}

/// Angular factor `A_N(z) = ∫_{S^{N-1}} e^{z(cos θ - 1)} dσ`.
///
/// With it, `∫_{|y| = r} G(x - y) dσ(y) = r^{N-1} (4πτ)^{-N/2} e^{-(ρ-r)²/4τ} A_N(ρr/2τ)`.
pub fn angular_factor(n: usize, z: f64) -> f64 {
    if z <= 0.0 {
        return sphere_area(n);
    }
    match n {
        1 => 1.0 + (-2.0 * z).exp(),
        3 => 2.0 * PI * (-(-2.0 * z).exp_m1()) / z,
        // A_N(z) = (2π)^{N/2} z^{1-N/2} e^{-z} I_{N/2-1}(z)
        _ => {
            (2.0 * PI).powf(n as f64 / 2.0)
                * z.powf(1.0 - n as f64 / 2.0)
                * scaled_bessel_i(n - 2, z)
        }
    }
}

/// `∫ G(x - y, τ) dμ(y)` averaged over `|y| = r`, times the radial measure `r^{N-1}`,
/// written as `(4πτ)^{-N/2} e^{-(ρ-r)²/4τ} A_N(ρr/2τ)`.
fn shell_kernel(n: usize, rho: f64, r: f64, tau: f64) -> f64 {
    let z = rho * r / (2.0 * tau);
    (4.0 * PI * tau).powf(-(n as f64) / 2.0)
        * (-(rho - r) * (rho - r) / (4.0 * tau)).exp()
        * angular_factor(n, z)
}

const RADIAL_REL_TOL: f64 = 1e-10;

/// `[S(D t) μ](x)` at one radius `|x| = rho`.
pub fn semigroup_radial_at(
    mu: &dyn RadialDensity,
    diffusivity: f64,
    t: f64,
    rho: f64,
) -> Result<f64> {
    if !(t > 0.0) || !(diffusivity > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need t > 0 and D > 0, got t = {t}, D = {diffusivity}"
        )));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "radius must be nonnegative, got {rho}"
        )));
    }
    let n = mu.dim();
    let tau = diffusivity * t;
    let mut value = mu.atom() * gaussian(n, rho, tau);
    if mu.is_zero() {
        return Ok(value);
    }
    if !mu.locally_finite() {
        return Err(Error::InfiniteMass(
            "heat flow of a measure that is not locally finite".into(),
        ));
    }
    let width = tau.sqrt();
    let lo = (rho - 40.0 * width).max(0.0);
    let hi = (rho + 40.0 * width).min(mu.cutoff());
    if hi <= lo {
        return Ok(value);
    }
    let lam = mu.origin_power();
    let nf = n as f64;
    let mut start = lo;
    if lo == 0.0 {
        // origin piece in u = ln(1/r): dr = r du
        let rc = hi.min(width / 4.0);
        let u_c = -rc.ln();
        let s = nf - lam;
        let piece = convergent_half_line(
            |v| {
                let u = u_c + v;
                let red = mu.reduced_log(u);
                if red == 0.0 {
                    return 0.0;
                }
                let r = (-u).exp();
                (-s * v).exp() * red * shell_kernel(n, rho, r, tau)
            },
            0.0,
            Tolerance::rel(RADIAL_REL_TOL),
        )?;
        value += (-s * u_c).exp() * piece.value;
        start = rc;
    }
    if hi > start {
        // remaining piece in s = ln r: dr = r ds
        let mut breaks = vec![start.ln(), hi.ln()];
        for k in [-8.0, -2.0, 0.0, 2.0, 8.0] {
            let b = rho + k * width;
            if b > start && b < hi {
                breaks.push(b.ln());
            }
        }
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        let q = gauss_kronrod_pieces(
            |s| {
                let r = s.exp();
                let red = mu.reduced_log(-s);
                if red == 0.0 {
                    return 0.0;
                }
                red * r.powf(nf - lam) * shell_kernel(n, rho, r, tau)
            },
            &breaks,
            Tolerance::rel(RADIAL_REL_TOL),
        )?;
        value += q.value;
    }
    Ok(value)
}

/// `[S(D t) μ]` at each radius, in input order.
pub fn apply_semigroup_radial(
    mu: &dyn RadialDensity,
    diffusivity: f64,
    t: f64,
    radii: &[f64],
) -> Result<Vec<f64>> {
    radii
        .par_iter()
        .map(|&rho| semigroup_radial_at(mu, diffusivity, t, rho))
        .collect()
}

/// Radii probed for the sup-norm of `S(τ)μ`: the origin plus a 16-point scan.
pub fn sup_scan_radii(mu: &dyn RadialDensity, dt: f64) -> Vec<f64> {
    let w = dt.sqrt();
    let reach = if mu.cutoff().is_finite() {
        mu.cutoff() + 2.0 * w
    } else {
        8.0 * w
    };
    let mut radii = vec![0.0];
    radii.extend(crate::special::logspace(w / 8.0, 4.0 * w, 8));
    radii.extend((1..=8).map(|k| reach * k as f64 / 8.0));
    radii
}

/// `‖S(D t) μ‖_∞`, from the origin value and a radius scan.
pub fn semigroup_radial_sup(mu: &dyn RadialDensity, diffusivity: f64, t: f64) -> Result<f64> {
    let radii = sup_scan_radii(mu, diffusivity * t);
    let vals = apply_semigroup_radial(mu, diffusivity, t, &radii)?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::RadialProfile;
    use crate::quadrature::gauss_kronrod;

    #[test]
    fn angular_factor_closed_forms() {
        for z in [1e-9, 1e-3, 0.4, 3.0, 25.0, 300.0] {
            // N = 2: 2π e^{-z} I0(z), with I0 by quadrature
            let i0 = gauss_kronrod(
                |th| (z * (th.cos() - 1.0)).exp(),
                0.0,
                PI,
                Tolerance::rel(1e-14),
            )
            .unwrap()
            .value;
            let a2 = angular_factor(2, z);
            assert!(
                (a2 / (2.0 * i0) - 1.0).abs() < 1e-10,
                "z={z}: {a2} vs {}",
                2.0 * i0
            );
            // the Bessel form reproduces the N = 3 closed form
            let general3 = (2.0 * PI).powf(1.5) * z.powf(-0.5) * scaled_bessel_i(1, z);
            assert!((general3 / angular_factor(3, z) - 1.0).abs() < 1e-10);
            // N = 4 against direct angular quadrature
            let d4 = gauss_kronrod(
                |th| (z * (th.cos() - 1.0)).exp() * th.sin().powi(2),
                0.0,
                PI,
                Tolerance::rel(1e-14),
            )
            .unwrap()
            .value;
            assert!(
                (angular_factor(4, z) / (sphere_area(3) * d4) - 1.0).abs() < 1e-9,
                "z={z}"
            );
        }
    }

    #[test]
    fn point_mass_gives_kernel() {
        let a = RadialProfile::point_mass(3, 1.0).unwrap();
        let v = apply_semigroup_radial(&a, 1.0, 0.3, &[0.0, 0.5, 2.0]).unwrap();
        for (r, x) in [0.0, 0.5, 2.0].iter().zip(v) {
            assert_eq!(x, gaussian(3, *r, 0.3));
        }
    }

    #[test]
    fn constant_density_is_preserved() {
        for n in 1..=4 {
            let c = RadialProfile::constant(n, 2.5).unwrap();
            let v = apply_semigroup_radial(&c, 1.0, 0.1, &[0.0, 0.3, 3.0]).unwrap();
            for x in v {
                assert!((x / 2.5 - 1.0).abs() < 1e-9, "n={n}: {x}");
            }
        }
    }

    #[test]
    fn uniform_ball_in_one_dimension() {
        // S(t)χ_{[-1,1]}(x) = (erf((1-x)/2√t) + erf((1+x)/2√t))/2
        let c = RadialProfile::power_law(1, 1.0, 0.0).unwrap();
        let t: f64 = 0.05;
        let erf = |x: f64| {
            let q = gauss_kronrod(|s| (-s * s).exp(), 0.0, x, Tolerance::rel(1e-15))
                .unwrap()
                .value;
            2.0 / PI.sqrt() * q
        };
        for x in [0.0, 0.5, 0.99, 1.3] {
            let exact =
                0.5 * (erf((1.0 - x) / (2.0 * t.sqrt())) + erf((1.0 + x) / (2.0 * t.sqrt())));
            let got = semigroup_radial_at(&c, 1.0, t, x).unwrap();
            assert!((got - exact).abs() < 1e-10, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn power_singularity_at_origin_in_whole_space() {
        // S(t)|x|^{-λ} on R^N at 0 = Γ((N-λ)/2)/Γ(N/2) (4t)^{-λ/2}
        let (n, lam, t) = (3usize, 1.2f64, 1e-3f64);
        let mu = RadialProfile::power_law(n, 1.0, lam)
            .unwrap()
            .with_cutoff(f64::INFINITY)
            .unwrap();
        let got = semigroup_radial_at(&mu, 1.0, t, 0.0).unwrap();
        let lg = crate::special::ln_gamma;
        let exact =
            (lg((n as f64 - lam) / 2.0) - lg(n as f64 / 2.0)).exp() * (4.0 * t).powf(-lam / 2.0);
        assert!((got / exact - 1.0).abs() < 1e-8, "{got} vs {exact}");
    }
}
