//! One-dimensional quadrature: adaptive Gauss–Kronrod for bounded intervals,
//! double-exponential rules for endpoint singularities and half lines, and a
//! semi-infinite integrator that tells convergent tails from divergent ones.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub abs_error: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge: value {value:e}, error estimate {abs_error:e} after {evals} evaluations")]
    NonConvergence {
        value: f64,
        abs_error: f64,
        evals: usize,
    },
    #[error("integrand returned a non-finite value at x = {at:e}")]
    NonFinite { at: f64 },
}

impl QuadError {
    /// Best available estimate carried by a non-convergence error.
    pub fn estimate(&self) -> Option<f64> {
        match self {
            QuadError::NonConvergence { value, .. } => Some(*value),
            QuadError::NonFinite { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-300,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Tolerance {
            rel,
            ..Default::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        // below ~100 ulp the Kronrod error estimate is dominated by its own roundoff floor
        self.abs
            .max(self.rel.max(100.0 * f64::EPSILON) * value.abs())
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208175255700,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { at: center });
    }
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { at: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { at: x2 });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let resasc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let resabs = fv1
        .iter()
        .zip(fv2.iter())
        .zip(WGK.iter())
        .map(|((x, y), w)| w * (x.abs() + y.abs()))
        .sum::<f64>()
        + WGK[10] * fc.abs();
    let roundoff = 50.0 * f64::EPSILON * resabs * half.abs();
    Ok((value, err.max(roundoff)))
}

/// Globally adaptive Gauss–Kronrod (10/21) integration of `f` over `[a, b]`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Quad, QuadError> {
    if a == b {
        return Ok(Quad {
            value: 0.0,
            abs_error: 0.0,
            evals: 0,
        });
    }
    let (value, error) = kronrod21(&mut f, a, b)?;
    let mut evals = 21;
    let mut heap = BinaryHeap::new();
    let mut finished_value = 0.0;
    let mut finished_error = 0.0;
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    while total_err > tol.target(total) {
        if heap.len() >= tol.max_intervals {
            return Err(QuadError::NonConvergence {
                value: total,
                abs_error: total_err,
                evals,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b)
            || mid >= worst.a.max(worst.b)
            || (worst.b - worst.a).abs() < 4.0 * f64::EPSILON * mid.abs()
        {
            // Cannot split further; freeze this piece.
            finished_value += worst.value;
            finished_error += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod21(&mut f, worst.a, mid)?;
        let (v2, e2) = kronrod21(&mut f, mid, worst.b)?;
        evals += 42;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        total = finished_value + heap.iter().map(|s| s.value).sum::<f64>();
        total_err = finished_error + heap.iter().map(|s| s.error).sum::<f64>();
    }
    if total_err > tol.target(total) {
        return Err(QuadError::NonConvergence {
            value: total,
            abs_error: total_err,
            evals,
        });
    }
    Ok(Quad {
        value: total,
        abs_error: total_err,
        evals,
    })
}

/// Gauss–Kronrod over consecutive breakpoints; errors add up and the
/// relative tolerance refers to the total.
pub fn gauss_kronrod_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Quad, QuadError> {
    let mut out = Quad {
        value: 0.0,
        abs_error: 0.0,
        evals: 0,
    };
    // a coarse pass sets an absolute floor so that negligible pieces do not
    // chase relative accuracy into roundoff
    let coarse = Tolerance {
        abs: 0.0,
        rel: 1e-3,
        max_intervals: 8,
    };
    let estimate: f64 = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| match gauss_kronrod(&mut f, w[0], w[1], coarse) {
            Ok(q) => q.value,
            Err(QuadError::NonConvergence { value, .. }) => value,
            Err(_) => 0.0,
        })
        .sum();
    let tol = if estimate.is_finite() {
        Tolerance {
            abs: tol.abs.max(0.01 * tol.rel * estimate.abs()),
            ..tol
        }
    } else {
        tol
    };
    let mut loose = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let q = match gauss_kronrod(&mut f, w[0], w[1], tol) {
            Ok(q) => q,
            // judged against the total once every piece is in
            Err(QuadError::NonConvergence {
                value,
                abs_error,
                evals,
            }) if value.is_finite() && abs_error.is_finite() => {
                loose += abs_error;
                Quad {
                    value,
                    abs_error,
                    evals,
                }
            }
            Err(e) => return Err(e),
        };
        out.value += q.value;
        out.abs_error += q.abs_error;
        out.evals += q.evals;
    }
    if loose > tol.target(out.value) {
        return Err(QuadError::NonConvergence {
            value: out.value,
            abs_error: out.abs_error,
            evals: out.evals,
        });
    }
    Ok(out)
}

const DE_MAX_LEVEL: usize = 12;
const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// Tanh–sinh rule on `[a, b]`. The integrand receives `(x, x - a, b - x)` so that
/// singular behaviour at either end can be evaluated without cancellation.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<Quad, QuadError> {
    if a == b {
        return Ok(Quad {
            value: 0.0,
            abs_error: 0.0,
            evals: 0,
        });
    }
    let half = 0.5 * (b - a);
    let mut evals = 0usize;
    // term at abscissa parameter t (t may be negative)
    let mut term = |t: f64, evals: &mut usize| -> Result<Option<f64>, QuadError> {
        let s = HALF_PI * t.sinh();
        let cosh_s = s.cosh();
        let weight = half * HALF_PI * t.cosh() / (cosh_s * cosh_s);
        let d = 2.0 * half / ((2.0 * s.abs()).exp() + 1.0); // distance to nearer end
        if d <= 0.0 || !weight.is_finite() || weight == 0.0 {
            return Ok(None);
        }
        let (x, da, db) = if t >= 0.0 {
            (b - d, (b - a) - d, d)
        } else {
            (a + d, d, (b - a) - d)
        };
        if da <= 0.0 || db <= 0.0 {
            return Ok(None);
        }
        *evals += 1;
        let v = f(x, da, db);
        if !v.is_finite() {
            return Err(QuadError::NonFinite { at: x });
        }
        Ok(Some(weight * v))
    };
    let mut step = 1.0;
    let mut sum = term(0.0, &mut evals)?.unwrap_or(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * step;
        let mut any = false;
        let mut local = 0.0;
        for tt in [t, -t] {
            if let Some(v) = term(tt, &mut evals)? {
                local += v;
                any = true;
            }
        }
        sum += local;
        if !any || t > 6.5 {
            break;
        }
        k += 1;
    }
    let mut estimate = sum * step;
    let mut prev = estimate;
    for _level in 1..=DE_MAX_LEVEL {
        step *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * step;
            if t > 6.5 {
                break;
            }
            let mut any = false;
            for tt in [t, -t] {
                if let Some(v) = term(tt, &mut evals)? {
                    sum += v;
                    any = true;
                }
            }
            if !any {
                break;
            }
            k += 2;
        }
        estimate = sum * step;
        let diff = (estimate - prev).abs();
        if diff <= rel_tol * estimate.abs() || diff == 0.0 {
            return Ok(Quad {
                value: estimate,
                abs_error: diff,
                evals,
            });
        }
        prev = estimate;
    }
    Err(QuadError::NonConvergence {
        value: estimate,
        abs_error: (estimate - prev).abs(),
        evals,
    })
}

/// Exp–sinh rule on `[a, ∞)`; the integrand receives `(x, x - a)`.
pub fn exp_sinh<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    a: f64,
    rel_tol: f64,
) -> Result<Quad, QuadError> {
    let mut evals = 0usize;
    let mut term = |t: f64, evals: &mut usize| -> Result<Option<f64>, QuadError> {
        let s = HALF_PI * t.sinh();
        if s > 700.0 {
            return Ok(None);
        }
        let d = s.exp();
        if d == 0.0 {
            return Ok(None);
        }
        let weight = HALF_PI * t.cosh() * d;
        *evals += 1;
        let v = f(a + d, d);
        if !v.is_finite() {
            return Err(QuadError::NonFinite { at: a + d });
        }
        Ok(Some(weight * v))
    };
    let t_max = 6.7;
    let t_min = -4.6;
    let mut step = 0.5;
    let mut sum = 0.0;
    let mut k = 0i64;
    let mut tail_small = 0;
    // grow outward, stop early once terms are negligible
    loop {
        let t = k as f64 * step;
        if t > t_max {
            break;
        }
        if let Some(v) = term(t, &mut evals)? {
            sum += v;
            if k > 4 && v.abs() <= 1e-18 * sum.abs() {
                tail_small += 1;
                if tail_small > 2 {
                    break;
                }
            } else {
                tail_small = 0;
            }
        } else {
            break;
        }
        k += 1;
    }
    let mut k = -1i64;
    loop {
        let t = k as f64 * step;
        if t < t_min {
            break;
        }
        match term(t, &mut evals)? {
            Some(v) => sum += v,
            None => break,
        }
        k -= 1;
    }
    let mut estimate = sum * step;
    let mut prev = estimate;
    for _level in 1..=DE_MAX_LEVEL {
        step *= 0.5;
        let mut k = 1i64;
        loop {
            let t = k as f64 * step;
            if t > t_max {
                break;
            }
            match term(t, &mut evals)? {
                Some(v) => sum += v,
                None => break,
            }
            k += 2;
        }
        let mut k = -1i64;
        loop {
            let t = k as f64 * step;
            if t < t_min {
                break;
            }
            match term(t, &mut evals)? {
                Some(v) => sum += v,
                None => break,
            }
            k -= 2;
        }
        estimate = sum * step;
        let diff = (estimate - prev).abs();
        if diff <= rel_tol * estimate.abs() || diff == 0.0 {
            return Ok(Quad {
                value: estimate,
                abs_error: diff,
                evals,
            });
        }
        prev = estimate;
    }
    Err(QuadError::NonConvergence {
        value: estimate,
        abs_error: (estimate - prev).abs(),
        evals,
    })
}

/// Outcome of a half-line integral whose convergence is not known in advance.
#[derive(Debug, Clone, PartialEq)]
pub enum Tail {
    Finite(Quad),
    /// Partial integrals kept growing. `rate` is the exponential growth rate of
    /// the partial integral per unit of the integration variable (0 when the
    /// growth is sub-exponential).
    Divergent {
        rate: f64,
        partials: Vec<(f64, f64)>,
    },
}

impl Tail {
    pub fn value(&self) -> f64 {
        match self {
            Tail::Finite(q) => q.value,
            Tail::Divergent { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Tail::Finite(_))
    }
}

/// Ratio of successive partial integrals above which a refinement counts as growth.
pub const DIVERGENCE_RATIO: f64 = 1.1;

/// Integrate a nonnegative `f` over `[a, ∞)`.
///
/// Partial integrals up to `a + s 10^k` (k = 0..=6, `s = max(1, |a|)`) are formed with adaptive
/// Gauss–Kronrod; three successive ratios above [`DIVERGENCE_RATIO`] (or an
/// overflow) classify the integral as divergent. Otherwise the remainder
/// beyond the last partial is added with an exp–sinh rule.
pub fn half_line<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    tol: Tolerance,
) -> Result<Tail, QuadError> {
    let mut partials: Vec<(f64, f64)> = Vec::new();
    let mut acc = 0.0;
    let mut lo = a;
    let mut abs_err = 0.0;
    let mut evals = 0;
    let mut growth_hits = 0;
    // pieces grow geometrically relative to the starting point so that a
    // far-out start does not mimic linear growth
    let scale = a.abs().max(1.0);
    for k in 0..=6 {
        let hi = a + scale * 10f64.powi(k);
        let piece = gauss_kronrod(
            &mut f,
            lo,
            hi,
            Tolerance {
                abs: tol.abs,
                rel: tol.rel * 0.1,
                max_intervals: tol.max_intervals,
            },
        );
        let piece = match piece {
            Ok(q) => q,
            Err(QuadError::NonFinite { .. }) => {
                return Ok(Tail::Divergent {
                    rate: growth_rate(&partials),
                    partials,
                });
            }
            Err(QuadError::NonConvergence {
                value,
                abs_error,
                evals: n,
            }) => {
                if !value.is_finite() || value > 1e300 {
                    return Ok(Tail::Divergent {
                        rate: growth_rate(&partials),
                        partials,
                    });
                }
                // accept a loosely converged piece when it is small relative to the total
                if abs_error > 1e-6 * (acc + value).abs().max(tol.abs) {
                    return Err(QuadError::NonConvergence {
                        value: acc + value,
                        abs_error: abs_err + abs_error,
                        evals: evals + n,
                    });
                }
                Quad {
                    value,
                    abs_error,
                    evals: n,
                }
            }
        };
        let prev = acc;
        acc += piece.value;
        abs_err += piece.abs_error;
        evals += piece.evals;
        if !acc.is_finite() || acc > 1e300 {
            return Ok(Tail::Divergent {
                rate: growth_rate(&partials),
                partials,
            });
        }
        partials.push((hi, acc));
        if k >= 1 && prev > 0.0 {
            if acc / prev > DIVERGENCE_RATIO {
                growth_hits += 1;
            } else {
                growth_hits = 0;
            }
        }
        lo = hi;
    }
    if growth_hits >= 3 {
        return Ok(Tail::Divergent {
            rate: growth_rate(&partials),
            partials,
        });
    }
    let tail = exp_sinh(|_, d| f(lo + d), lo, tol.rel.max(1e-12));
    let tail = match tail {
        Ok(q) => q,
        Err(QuadError::NonConvergence {
            value,
            abs_error,
            evals: n,
        }) if abs_error <= tol.target(acc + value) * 10.0 => Quad {
            value,
            abs_error,
            evals: n,
        },
        Err(QuadError::NonFinite { .. }) => {
            return Ok(Tail::Divergent {
                rate: growth_rate(&partials),
                partials,
            })
        }
        Err(e) => return Err(e),
    };
    Ok(Tail::Finite(Quad {
        value: acc + tail.value,
        abs_error: abs_err + tail.abs_error,
        evals: evals + tail.evals,
    }))
}

/// `∫_a^∞ f` for a nonnegative `f` already known to be integrable, with tails
/// as slow as `x^{-1-ε}`.
///
/// With `x = a + m(e^w - 1)`, `m = max(1, |a|)`, such a tail decays like
/// `e^{-εw}`. The integral is taken up to `w = 700` and the remainder is
/// extrapolated from the decay rate measured over the last ten units of `w`.
pub fn convergent_half_line<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    tol: Tolerance,
) -> Result<Quad, QuadError> {
    let m = a.abs().max(1.0);
    let mut g = |w: f64| {
        let stretch = m * w.exp();
        let v = f(a + m * w.exp_m1());
        if v == 0.0 {
            0.0
        } else {
            v * stretch
        }
    };
    const W_END: f64 = 700.0;
    let body = gauss_kronrod_pieces(&mut g, &[0.0, 1.0, 4.0, 16.0, 64.0, 200.0, W_END], tol)?;
    let (g1, g2) = (g(W_END - 10.0), g(W_END));
    let remainder = if g2 == 0.0 {
        0.0
    } else {
        let rate = (g1 / g2).ln() / 10.0;
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(QuadError::NonConvergence {
                value: body.value,
                abs_error: f64::INFINITY,
                evals: body.evals + 2,
            });
        }
        g2 / rate
    };
    Ok(Quad {
        value: body.value + remainder,
        abs_error: body.abs_error + 0.1 * remainder,
        evals: body.evals + 2,
    })
}

fn growth_rate(partials: &[(f64, f64)]) -> f64 {
    let usable: Vec<&(f64, f64)> = partials
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .collect();
    if usable.len() < 2 {
        return f64::INFINITY;
    }
    let (u1, v1) = usable[usable.len() - 2];
    let (u2, v2) = usable[usable.len() - 1];
    ((v2 / v1).ln() / (u2 - u1)).max(0.0)
}
