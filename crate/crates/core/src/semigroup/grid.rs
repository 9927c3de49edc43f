//! Fields on a periodic box and their evolution under the heat flow.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported grid dimension.
pub const MAX_GRID_DIM: usize = 3;

/// Node-centered samples on `[-L, L)^N` with `M` points per axis; node `i`
/// sits at `-L + i h`, `h = 2L/M`, so the origin is node `M/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub dim: usize,
    pub points: usize,
    pub halfwidth: f64,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(dim: usize, points: usize, halfwidth: f64) -> Result<Self> {
        check_geometry(dim, points, halfwidth)?;
        Ok(GridField {
            dim,
            points,
            halfwidth,
            values: vec![0.0; points.pow(dim as u32)],
        })
    }

    pub fn from_fn(
        dim: usize,
        points: usize,
        halfwidth: f64,
        f: impl Fn(&[f64]) -> f64 + Sync,
    ) -> Result<Self> {
        let mut g = Self::zeros(dim, points, halfwidth)?;
        let geom = g.geometry();
        g.values.par_iter_mut().enumerate().for_each(|(i, v)| {
            let x = geom.coords(i);
            *v = f(&x[..geom.dim]);
        });
        Ok(g)
    }

    pub fn constant(dim: usize, points: usize, halfwidth: f64, c: f64) -> Result<Self> {
        let mut g = Self::zeros(dim, points, halfwidth)?;
        g.values.iter_mut().for_each(|v| *v = c);
        Ok(g)
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            dim: self.dim,
            points: self.points,
            halfwidth: self.halfwidth,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.halfwidth / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn origin_index(&self) -> usize {
        let c = self.points / 2;
        (0..self.dim).fold(0, |acc, _| acc * self.points + c)
    }

    pub fn sup_diff(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn same_geometry(&self, other: &GridField) -> bool {
        self.geometry() == other.geometry()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> GridField {
        GridField {
            values: self.values.par_iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Largest distance from the origin of a node carrying more than
    /// `1e-14` of the maximum.
    pub fn support_radius(&self) -> f64 {
        let floor = 1e-14 * self.sup();
        let geom = self.geometry();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > floor)
            .map(|(i, _)| geom.radius(i))
            .fold(0.0, f64::max)
    }

    /// Binary layout: `N`, `M` as little-endian u64, `L` as little-endian f64,
    /// then the values as little-endian f64 in row-major order.
    pub fn write_bin(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        w.write_all(&(self.points as u64).to_le_bytes())?;
        w.write_all(&self.halfwidth.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_bin(mut r: impl Read) -> Result<Self> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        let dim = u64::from_le_bytes(b) as usize;
        r.read_exact(&mut b)?;
        let points = u64::from_le_bytes(b) as usize;
        r.read_exact(&mut b)?;
        let halfwidth = f64::from_le_bytes(b);
        let mut g = Self::zeros(dim, points, halfwidth)?;
        for v in g.values.iter_mut() {
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        Ok(g)
    }

    pub fn save_bin(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_bin(std::io::BufWriter::new(f))?;
        Ok(())
    }

    /// Two-column `x,value` CSV; one-dimensional fields only.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::GeometryMismatch(
                "CSV output is only defined for N = 1".into(),
            ));
        }
        writeln!(w, "x,value")?;
        let h = self.spacing();
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", -self.halfwidth + i as f64 * h, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub dim: usize,
    pub points: usize,
    pub halfwidth: f64,
}

impl Geometry {
    pub fn spacing(&self) -> f64 {
        2.0 * self.halfwidth / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis node indices of a flat index.
    pub fn multi_index(&self, mut i: usize) -> [usize; MAX_GRID_DIM] {
        let mut idx = [0; MAX_GRID_DIM];
        for a in (0..self.dim).rev() {
            idx[a] = i % self.points;
            i /= self.points;
        }
        idx
    }

    pub fn coords(&self, i: usize) -> [f64; MAX_GRID_DIM] {
        let h = self.spacing();
        let idx = self.multi_index(i);
        let mut x = [0.0; MAX_GRID_DIM];
        for a in 0..self.dim {
            x[a] = -self.halfwidth + idx[a] as f64 * h;
        }
        x
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.coords(i)[..self.dim]
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

fn check_geometry(dim: usize, points: usize, halfwidth: f64) -> Result<()> {
    if !(1..=MAX_GRID_DIM).contains(&dim) {
        return Err(Error::GeometryMismatch(format!(
            "grid dimension must be 1..=3, got {dim}"
        )));
    }
    if points < 2 || points % 2 != 0 {
        return Err(Error::GeometryMismatch(format!(
            "points per axis must be even and at least 2, got {points}"
        )));
    }
    if !(halfwidth.is_finite() && halfwidth > 0.0) {
        return Err(Error::GeometryMismatch(format!(
            "box half-width must be positive, got {halfwidth}"
        )));
    }
    Ok(())
}

/// Whether the box stands for the torus itself or for a window on R^N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Torus,
    #[default]
    WholeSpace,
}

/// Cached FFT plans for one grid geometry.
#[derive(Clone)]
pub struct Spectral {
    geom: Geometry,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("geom", &self.geom)
            .finish()
    }
}

impl Spectral {
    pub fn new(geom: Geometry) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            geom,
            forward: planner.plan_fft_forward(geom.points),
            inverse: planner.plan_fft_inverse(geom.points),
        }
    }

    pub fn for_field(field: &GridField) -> Self {
        Self::new(field.geometry())
    }

    pub fn geometry(&self) -> Geometry {
        self.geom
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let m = self.geom.points;
        let fft = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        for axis in 0..self.geom.dim {
            let stride = m.pow((self.geom.dim - 1 - axis) as u32);
            let block = m * stride;
            buf.par_chunks_mut(block).for_each(|chunk| {
                let mut line = vec![Complex64::new(0.0, 0.0); m];
                let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
                for offset in 0..stride {
                    for k in 0..m {
                        line[k] = chunk[offset + k * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for k in 0..m {
                        chunk[offset + k * stride] = line[k];
                    }
                }
            });
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Inverse transform including the `1/M^N` normalization; returns real parts.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, true);
        let scale = 1.0 / self.geom.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// One-dimensional heat multiplier for time `dt = D·t` (see [`heat_multiplier_1d`]).
    pub fn multiplier_1d(&self, dt: f64) -> Vec<f64> {
        heat_multiplier_1d(self.geom.points, self.geom.halfwidth, dt)
    }

    /// Multiply a spectrum in place by the N-dimensional heat multiplier.
    pub fn apply_multiplier(&self, spectrum: &mut [Complex64], dt: f64) {
        if dt == 0.0 {
            return;
        }
        let m1 = self.multiplier_1d(dt);
        let geom = self.geom;
        spectrum.par_iter_mut().enumerate().for_each(|(i, c)| {
            let idx = geom.multi_index(i);
            let mut f = 1.0;
            for a in 0..geom.dim {
                f *= m1[idx[a]];
            }
            *c *= f;
        });
    }

    /// Full N-dimensional multiplier as a flat array.
    pub fn multiplier(&self, dt: f64) -> Vec<f64> {
        let m1 = self.multiplier_1d(dt);
        let geom = self.geom;
        (0..geom.len())
            .into_par_iter()
            .map(|i| {
                let idx = geom.multi_index(i);
                (0..geom.dim).map(|a| m1[idx[a]]).product()
            })
            .collect()
    }
}

/// Fourier multiplier of the normalized, sampled, periodized heat kernel of
/// variance `2·dt` on `M` nodes of `[-L, L)`.
///
/// Once `dt ≥ h²` this equals `exp(-dt k²)` to rounding; for smaller times it
/// keeps the discrete kernel positive so the flow stays order preserving.
pub fn heat_multiplier_1d(points: usize, halfwidth: f64, dt: f64) -> Vec<f64> {
    let m = points;
    let h = 2.0 * halfwidth / m as f64;
    let dk = std::f64::consts::PI / halfwidth;
    let wavenumber = |j: usize| -> f64 {
        let s = if j <= m / 2 {
            j as f64
        } else {
            j as f64 - m as f64
        };
        s * dk
    };
    if dt <= 0.0 {
        return vec![1.0; m];
    }
    let alias = 2.0 * std::f64::consts::PI / h;
    if dt * alias * alias >= 40.0 {
        // spectral sum converges in a few terms
        let poisson = |k: f64| -> f64 {
            let mut s = (-dt * k * k).exp();
            for j in 1..4 {
                let j = j as f64;
                s += (-dt * (k + j * alias).powi(2)).exp() + (-dt * (k - j * alias).powi(2)).exp();
            }
            s
        };
        let norm = poisson(0.0);
        return (0..m).map(|j| poisson(wavenumber(j)) / norm).collect();
    }
    // real-space kernel with periodic images, normalized to unit sum
    let mut kernel = vec![0.0; m];
    let period = 2.0 * halfwidth;
    let reach = (40.0 * dt).sqrt() * 2.0;
    let images = (reach / period).ceil() as i64 + 1;
    for (i, k) in kernel.iter_mut().enumerate() {
        let x = if i <= m / 2 {
            i as f64 * h
        } else {
            (i as f64 - m as f64) * h
        };
        let mut s = 0.0;
        for img in -images..=images {
            let y = x + img as f64 * period;
            s += (-y * y / (4.0 * dt)).exp();
        }
        *k = s;
    }
    let total: f64 = kernel.iter().sum();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let mut buf: Vec<Complex64> = kernel
        .iter()
        .map(|&v| Complex64::new(v / total, 0.0))
        .collect();
    fft.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Clamp rounding-level negatives and reject genuine ones.
pub fn enforce_positivity(values: &mut [f64]) -> Result<()> {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 * max;
    let mut worst = 0.0f64;
    for v in values.iter_mut() {
        if *v < 0.0 {
            if -*v > floor {
                worst = worst.min(*v);
            }
            *v = 0.0;
        }
    }
    if worst < 0.0 {
        return Err(Error::Positivity { min: worst, max });
    }
    Ok(())
}

/// Half-width below which the truncation of the heat kernel is a hard error.
pub fn tail_hard_limit(dt: f64) -> f64 {
    6.0 * dt.sqrt()
}

/// Check the Gaussian tail criterion for a field spreading over time `dt = D·t`.
pub fn check_tail(field: &GridField, dt: f64, domain: Domain) -> Result<()> {
    if domain == Domain::Torus || dt <= 0.0 || field.sup() == 0.0 {
        return Ok(());
    }
    let hard = tail_hard_limit(dt);
    if field.halfwidth < hard {
        return Err(Error::TailCriterion {
            halfwidth: field.halfwidth,
            required: hard,
            dt,
        });
    }
    let soft = field.support_radius() + hard;
    if field.halfwidth < soft {
        log::warn!(
            "box half-width {} is below support + 6 sqrt(Dt) = {:.4}; periodic images may alias",
            field.halfwidth,
            soft
        );
    }
    Ok(())
}

/// `S(D t)` applied to a field on the box, treating it as a window on R^N.
pub fn apply_semigroup_grid(field: &GridField, diffusivity: f64, t: f64) -> Result<GridField> {
    apply_semigroup_grid_on(field, diffusivity, t, Domain::WholeSpace)
}

pub fn apply_semigroup_grid_on(
    field: &GridField,
    diffusivity: f64,
    t: f64,
    domain: Domain,
) -> Result<GridField> {
    if !(t >= 0.0) || !(diffusivity > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need t >= 0 and D > 0, got t = {t}, D = {diffusivity}"
        )));
    }
    if t == 0.0 {
        return Ok(field.clone());
    }
    let dt = diffusivity * t;
    check_tail(field, dt, domain)?;
    let spec = Spectral::for_field(field);
    let mut hat = spec.forward(&field.values);
    spec.apply_multiplier(&mut hat, dt);
    let mut values = spec.inverse(hat);
    enforce_positivity(&mut values)?;
    Ok(GridField {
        values,
        ..field.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_matches_gaussian_when_resolved() {
        let m = heat_multiplier_1d(256, 4.0, 0.5);
        let dk = std::f64::consts::PI / 4.0;
        for (j, v) in m.iter().enumerate().take(129) {
            let k = j as f64 * dk;
            assert!((v - (-0.5 * k * k).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn real_space_and_spectral_branches_agree() {
        // dt·alias² just on either side of the switch
        let (m, l) = (64, 2.0);
        let h = 2.0 * l / m as f64;
        let alias = 2.0 * std::f64::consts::PI / h;
        let dt_switch = 40.0 / (alias * alias);
        let a = heat_multiplier_1d(m, l, dt_switch * 1.000001);
        let b = heat_multiplier_1d(m, l, dt_switch * 0.999999);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{x} {y}");
        }
    }

    #[test]
    fn small_time_flow_stays_positive() {
        let mut f = GridField::zeros(1, 64, 1.0).unwrap();
        let o = f.origin_index();
        f.values[o] = 1e6;
        f.values[o + 1] = 1e-3;
        let g = apply_semigroup_grid_on(&f, 1.0, 1e-6, Domain::Torus).unwrap();
        assert!(g.min() >= 0.0);
        assert!((g.mass() - f.mass()).abs() < 1e-9 * f.mass());
    }

    #[test]
    fn binary_roundtrip() {
        let f = GridField::from_fn(2, 8, 1.5, |x| x[0] + 2.0 * x[1]).unwrap();
        let mut buf = Vec::new();
        f.write_bin(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 64 * 8);
        assert_eq!(GridField::read_bin(&buf[..]).unwrap(), f);
    }

    #[test]
    fn layout_is_row_major() {
        let g = GridField::zeros(2, 4, 1.0).unwrap().geometry();
        assert_eq!(g.coords(1)[..2], [-1.0, -0.5]);
        assert_eq!(g.coords(4)[..2], [-0.5, -1.0]);
        let f = GridField::zeros(3, 4, 1.0).unwrap();
        assert_eq!(f.geometry().radius(f.origin_index()), 0.0);
    }

    #[test]
    fn tail_criterion() {
        let f = GridField::constant(1, 32, 1.0, 1.0).unwrap();
        assert!(matches!(
            apply_semigroup_grid(&f, 1.0, 1.0),
            Err(Error::TailCriterion { .. })
        ));
        assert!(apply_semigroup_grid_on(&f, 1.0, 1.0, Domain::Torus).is_ok());
    }
}
