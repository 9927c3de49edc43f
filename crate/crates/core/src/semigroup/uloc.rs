//! Uniformly local Lebesgue norms `sup_x ‖f‖_{L^r(B(x, ρ))}` on grid fields.

use crate::error::{Error, Result};

use super::grid::{GridField, Spectral};

/// Fraction of each cell (centered at a node offset) covered by `B(0, ρ)`,
/// laid out as a periodic stencil on the field's grid.
fn ball_stencil(field: &GridField, rho: f64) -> Vec<f64> {
    let geom = field.geometry();
    let h = geom.spacing();
    let m = geom.points as i64;
    let reach = (rho / h).ceil() as i64 + 1;
    let mut stencil = vec![0.0; geom.len()];
    let sub = match geom.dim {
        1 => 0,
        2 => 16,
        _ => 8,
    };
    let mut offsets = [0i64; 3];
    let span = (2 * reach + 1) as usize;
    let total = span.pow(geom.dim as u32);
    for flat in 0..total {
        let mut rem = flat;
        for a in 0..geom.dim {
            offsets[a] = (rem % span) as i64 - reach;
            rem /= span;
        }
        let frac = cell_fraction(&offsets[..geom.dim], h, rho, sub);
        if frac == 0.0 {
            continue;
        }
        let mut idx = 0usize;
        for a in 0..geom.dim {
            idx = idx * geom.points + offsets[a].rem_euclid(m) as usize;
        }
        stencil[idx] += frac;
    }
    stencil
}

/// Covered fraction of the cell `[o h - h/2, o h + h/2]^N`.
fn cell_fraction(offset: &[i64], h: f64, rho: f64, sub: usize) -> f64 {
    let near: f64 = offset
        .iter()
        .map(|&o| ((o.abs() as f64 - 0.5) * h).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt();
    let far: f64 = offset
        .iter()
        .map(|&o| ((o.abs() as f64 + 0.5) * h).powi(2))
        .sum::<f64>()
        .sqrt();
    if near >= rho {
        return 0.0;
    }
    if far <= rho {
        return 1.0;
    }
    if offset.len() == 1 {
        // exact overlap of an interval with [-ρ, ρ]
        let c = offset[0] as f64 * h;
        let lo = (c - h / 2.0).max(-rho);
        let hi = (c + h / 2.0).min(rho);
        return ((hi - lo) / h).max(0.0);
    }
    let n = offset.len();
    let per = sub;
    let count = per.pow(n as u32);
    let mut inside = 0usize;
    for k in 0..count {
        let mut rem = k;
        let mut r2 = 0.0;
        for &o in offset {
            let j = rem % per;
            rem /= per;
            let x = o as f64 * h - h / 2.0 + (j as f64 + 0.5) * h / per as f64;
            r2 += x * x;
        }
        if r2 < rho * rho {
            inside += 1;
        }
    }
    inside as f64 / count as f64
}

/// `sup_x (∫_{B(x,ρ)} |f|^r)^{1/r}` over node-centered balls; `r = ∞` gives the sup of `|f|`.
pub fn uloc_norm(field: &GridField, r: f64, rho: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParams(format!(
            "exponent must be at least 1, got {r}"
        )));
    }
    if !(rho > 0.0 && rho <= field.halfwidth) {
        return Err(Error::InvalidParams(format!(
            "ball radius must lie in (0, L], got {rho}"
        )));
    }
    if r.is_infinite() {
        return Ok(field.sup());
    }
    let powered: Vec<f64> = field.values.iter().map(|v| v.abs().powf(r)).collect();
    let scale = powered.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let normalized: Vec<f64> = powered.iter().map(|v| v / scale).collect();
    let spec = Spectral::for_field(field);
    let stencil = ball_stencil(field, rho);
    let a = spec.forward(&normalized);
    let b = spec.forward(&stencil);
    let prod = a.into_iter().zip(b).map(|(x, y)| x * y).collect();
    let conv = spec.inverse(prod);
    let best = conv.into_iter().fold(0.0, f64::max);
    Ok((best * scale * field.cell_volume()).powf(1.0 / r))
}
