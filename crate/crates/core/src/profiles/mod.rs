//! Radial initial data: power/log singular densities with optional point mass.

mod ball;
mod modulator;
mod orlicz;
mod sample;

use std::f64::consts::LN_2;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

pub use ball::{
    ball_measure, is_radially_nonincreasing, origin_ball_measure, sup_ball_measure,
    sup_ball_measure_fast,
};
pub use modulator::{ModTable, Modulator};
pub use orlicz::{
    lambda_sandwich_constant, ln_log_base_plus_exp, monotone_base, OrliczSpec, LAMBDA_CONVEX_BASE,
};
pub use sample::sample_to_grid;

use crate::error::{Error, Result};
use crate::exponents::{approx_eq, classify, derive_exponents, Case, SystemParams};

/// A radial nonnegative density on R^N with a possible singularity at the
/// origin, described in the log variable `u = ln(1/r)`.
pub trait RadialDensity: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Support radius (may be infinite).
    fn cutoff(&self) -> f64;

    /// `λ` such that `r^λ f(r)` varies slowly as `r → 0`.
    fn origin_power(&self) -> f64;

    /// `r^λ f(r)` at `r = e^{-u}`; zero outside the support.
    fn reduced_log(&self, u: f64) -> f64;

    /// `e` with `r^λ f(r) ≍ (ln 1/r)^e` as `r → 0`.
    fn log_tail_exponent(&self) -> f64;

    /// Point mass at the origin.
    fn atom(&self) -> f64 {
        0.0
    }

    fn is_zero(&self) -> bool;

    /// Closed form of the origin-centered ball mass (without the atom), if known.
    fn closed_form_ball(&self, _sigma: f64) -> Option<f64> {
        None
    }

    fn value(&self, r: f64) -> f64 {
        if r >= self.cutoff() || self.is_zero() {
            return 0.0;
        }
        if r <= 0.0 {
            return if self.origin_power() > 0.0 {
                f64::INFINITY
            } else {
                self.reduced_log(f64::INFINITY)
            };
        }
        let red = self.reduced_log(-r.ln());
        if red == 0.0 {
            0.0
        } else {
            red * r.powf(-self.origin_power())
        }
    }

    /// `ln f(e^{-u})`; `-inf` where the density vanishes.
    fn ln_value_log(&self, u: f64) -> f64 {
        let red = self.reduced_log(u);
        if red <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.origin_power() * u + red.ln()
        }
    }

    /// Whether balls around the origin carry finite mass.
    fn locally_finite(&self) -> bool {
        let n = self.dim() as f64;
        let lam = self.origin_power();
        self.is_zero()
            || lam < n && !approx_eq(lam, n)
            || approx_eq(lam, n) && self.log_tail_exponent() < -1.0
    }
}

/// `c · r^{-λ} · |log(a r / 2)|^κ · h(a r)` on `B(0, R)`, plus `m δ0`.
///
/// The argument scale `a` is 1 for freshly built profiles; rescaling in space
/// changes it so that the family is closed under dilations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub dim: usize,
    pub amplitude: f64,
    pub power: f64,
    pub logpow: f64,
    #[serde(default)]
    pub modulator: Modulator,
    #[serde(default = "one")]
    pub arg_scale: f64,
    pub cutoff: f64,
    #[serde(default)]
    pub atom: f64,
    #[serde(default)]
    pub locally_finite: bool,
}

fn one() -> f64 {
    1.0
}

impl RadialProfile {
    pub fn new(
        dim: usize,
        amplitude: f64,
        power: f64,
        logpow: f64,
        modulator: Modulator,
        cutoff: f64,
        atom: f64,
    ) -> Result<Self> {
        let mut p = RadialProfile {
            dim,
            amplitude,
            power,
            logpow,
            modulator,
            arg_scale: 1.0,
            cutoff,
            atom,
            locally_finite: false,
        };
        p.validate()?;
        p.locally_finite = RadialDensity::locally_finite(&p);
        Ok(p)
    }

    /// `c |x|^{-λ}` on the unit ball.
    pub fn power_law(dim: usize, amplitude: f64, power: f64) -> Result<Self> {
        Self::new(dim, amplitude, power, 0.0, Modulator::Identity, 1.0, 0.0)
    }

    pub fn point_mass(dim: usize, mass: f64) -> Result<Self> {
        Self::new(dim, 0.0, 0.0, 0.0, Modulator::Identity, 1.0, mass)
    }

    /// Constant density on all of R^N.
    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(
            dim,
            value,
            0.0,
            0.0,
            Modulator::Identity,
            f64::INFINITY,
            0.0,
        )
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, 0.0, 0.0, 0.0, Modulator::Identity, 1.0, 0.0).expect("zero profile is valid")
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Result<Self> {
        self.cutoff = cutoff;
        self.refresh()
    }

    pub fn with_atom(mut self, atom: f64) -> Result<Self> {
        self.atom = atom;
        self.refresh()
    }

    pub fn with_power(mut self, power: f64) -> Result<Self> {
        self.power = power;
        self.refresh()
    }

    /// Multiply the whole measure (density and atom) by `k ≥ 0`.
    pub fn scaled_by(&self, k: f64) -> Result<Self> {
        let mut p = self.clone();
        p.amplitude *= k;
        p.atom *= k;
        p.refresh()
    }

    fn refresh(mut self) -> Result<Self> {
        self.validate()?;
        self.locally_finite = RadialDensity::locally_finite(&self);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return bad(format!(
                "amplitude must be finite and nonnegative, got {}",
                self.amplitude
            ));
        }
        if !(self.atom.is_finite() && self.atom >= 0.0) {
            return bad(format!(
                "atom mass must be finite and nonnegative, got {}",
                self.atom
            ));
        }
        if !(self.power.is_finite() && self.power >= 0.0) {
            return bad(format!(
                "power must be finite and nonnegative, got {}",
                self.power
            ));
        }
        if !self.logpow.is_finite() {
            return bad("log power must be finite".into());
        }
        if !(self.cutoff > 0.0) {
            return bad(format!("cutoff must be positive, got {}", self.cutoff));
        }
        if !(self.arg_scale.is_finite() && self.arg_scale > 0.0) {
            return bad(format!(
                "argument scale must be positive, got {}",
                self.arg_scale
            ));
        }
        let plain = self.logpow == 0.0 && self.modulator.is_identity();
        if !plain && !(self.arg_scale * self.cutoff <= 1.0 * (1.0 + 1e-12)) {
            return bad("log factor and modulator need the support inside the unit ball (in the scaled argument)".into());
        }
        Ok(())
    }

    /// Log-space distance `|log(a r/2)|` at `r = e^{-u}`.
    fn log_arg(&self, u: f64) -> f64 {
        u + LN_2 - self.arg_scale.ln()
    }
}

impl RadialDensity for RadialProfile {
    fn dim(&self) -> usize {
        self.dim
    }

    fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn origin_power(&self) -> f64 {
        self.power
    }

    fn reduced_log(&self, u: f64) -> f64 {
        if self.amplitude == 0.0 || (self.cutoff.is_finite() && u <= -self.cutoff.ln()) {
            return 0.0;
        }
        let mut v = self.amplitude;
        if self.logpow != 0.0 {
            v *= self.log_arg(u).powf(self.logpow);
        }
        if !self.modulator.is_identity() {
            v *= self.modulator.eval_log(u - self.arg_scale.ln());
        }
        v
    }

    fn log_tail_exponent(&self) -> f64 {
        self.logpow - self.modulator.tail_exponent()
    }

    fn atom(&self) -> f64 {
        self.atom
    }

    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    fn closed_form_ball(&self, sigma: f64) -> Option<f64> {
        let n = self.dim as f64;
        if self.logpow == 0.0 && self.modulator.is_identity() && self.power < n {
            let rho = sigma.min(self.cutoff);
            let s = n - self.power;
            Some(self.amplitude * crate::special::sphere_area(self.dim) * rho.powf(s) / s)
        } else {
            None
        }
    }
}

/// Pointwise transforms of a profile: powers `f^β` and Orlicz functions `Λ(k f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    Power { beta: f64 },
    Orlicz { spec: OrliczSpec, pre_scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedProfile {
    pub base: RadialProfile,
    pub transform: Transform,
}

impl TransformedProfile {
    pub fn power(base: &RadialProfile, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "power must be positive, got {beta}"
            )));
        }
        if base.atom > 0.0 && beta != 1.0 {
            return Err(Error::Domain("a point mass has no pointwise power".into()));
        }
        Ok(TransformedProfile {
            base: base.clone(),
            transform: Transform::Power { beta },
        })
    }

    pub fn orlicz(base: &RadialProfile, spec: OrliczSpec, pre_scale: f64) -> Result<Self> {
        spec.validate()?;
        if base.atom > 0.0 {
            return Err(Error::Domain(
                "a point mass has no pointwise Orlicz transform".into(),
            ));
        }
        Ok(TransformedProfile {
            base: base.clone(),
            transform: Transform::Orlicz { spec, pre_scale },
        })
    }
}

impl RadialDensity for TransformedProfile {
    fn dim(&self) -> usize {
        self.base.dim
    }

    fn cutoff(&self) -> f64 {
        self.base.cutoff
    }

    fn origin_power(&self) -> f64 {
        match self.transform {
            Transform::Power { beta } => self.base.power * beta,
            Transform::Orlicz { .. } => self.base.power,
        }
    }

    fn reduced_log(&self, u: f64) -> f64 {
        let red = self.base.reduced_log(u);
        if red == 0.0 {
            return 0.0;
        }
        match self.transform {
            Transform::Power { beta } => red.powf(beta),
            Transform::Orlicz { spec, pre_scale } => {
                // Λ(k f) r^λ = k red [ln(base + k f)]^exp, with ln(k f) = λu + ln(k red)
                let x = self.base.power * u + (pre_scale * red).ln();
                let (exp, base) = spec.parts();
                pre_scale * red * (exp * ln_log_base_plus_exp(base, x)).exp()
            }
        }
    }

    fn log_tail_exponent(&self) -> f64 {
        let e = self.base.log_tail_exponent();
        match self.transform {
            Transform::Power { beta } => e * beta,
            Transform::Orlicz { spec, .. } => {
                if self.base.power > 0.0 {
                    e + spec.parts().0
                } else {
                    e
                }
            }
        }
    }

    fn atom(&self) -> f64 {
        self.base.atom
    }

    fn is_zero(&self) -> bool {
        self.base.is_zero()
    }
}

/// Profile pair of the borderline family for a given case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePair {
    pub case: Case,
    pub mu: RadialProfile,
    pub nu: RadialProfile,
}

/// Build the borderline initial data of the given case with amplitudes `c1`, `c2`.
///
/// Cases D and E require the modulator `h` (for `μ`); `ν` is then the point
/// mass `c2 δ0`. In case F both components are point masses.
pub fn make_optimal_profile(
    params: &SystemParams,
    case: Case,
    c1: f64,
    c2: f64,
    h: Option<Modulator>,
) -> Result<ProfilePair> {
    let actual = classify(params).label;
    if actual != case {
        return Err(Error::CaseMismatch {
            requested: case.to_string(),
            actual: actual.to_string(),
        });
    }
    let n = params.n;
    let nf = n as f64;
    let e = derive_exponents(params);
    let pq1 = params.pq1();
    let needs_h = matches!(case, Case::D | Case::E);
    match (&h, needs_h) {
        (None, true) => return Err(Error::Modulator(format!("case {case} needs a modulator"))),
        (Some(_), false) => {
            return Err(Error::Modulator(format!("case {case} takes no modulator")))
        }
        _ => {}
    }
    let plain = |c: f64, lam: f64, kappa: f64| {
        RadialProfile::new(n, c, lam, kappa, Modulator::Identity, 1.0, 0.0)
    };
    let (mu, nu) = match case {
        Case::A => (plain(c1, e.lambda_mu, 0.0)?, plain(c2, e.lambda_nu, 0.0)?),
        Case::B => (
            plain(c1, e.lambda_mu, -params.p / pq1)?,
            plain(c2, nf, -1.0 / pq1 - 1.0)?,
        ),
        Case::C => (
            plain(c1, nf, -nf / 2.0 - 1.0)?,
            plain(c2, nf, -nf / 2.0 - 1.0)?,
        ),
        Case::D | Case::E => {
            let h = h.expect("checked above");
            let lam = if case == Case::D { e.d_over_q } else { nf };
            (
                RadialProfile::new(n, c1, lam, 0.0, h, 1.0, 0.0)?,
                RadialProfile::point_mass(n, c2)?,
            )
        }
        Case::F => (
            RadialProfile::point_mass(n, c1)?,
            RadialProfile::point_mass(n, c2)?,
        ),
    };
    Ok(ProfilePair { case, mu, nu })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    U,
    V,
}

/// Dilation `f ↦ T^s f(T^{1/2} ·)` with `s` the scaling exponent of the
/// component; point masses scale by `T^{s - N/2}`.
pub fn scale_profile(
    profile: &RadialProfile,
    params: &SystemParams,
    t: f64,
    side: Side,
) -> Result<RadialProfile> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParams(format!(
            "scaling factor must be positive, got {t}"
        )));
    }
    if profile.dim != params.n {
        return Err(Error::InvalidParams(
            "profile dimension differs from N".into(),
        ));
    }
    let e = derive_exponents(params);
    let s = match side {
        Side::U => e.scal_u,
        Side::V => e.scal_v,
    };
    let nf = params.n as f64;
    let root = t.sqrt();
    let mut out = profile.clone();
    out.amplitude = profile.amplitude * t.powf(s - profile.power / 2.0);
    out.arg_scale = profile.arg_scale * root;
    out.cutoff = profile.cutoff / root;
    out.atom = profile.atom * t.powf(s - nf / 2.0);
    out.refresh()
}
