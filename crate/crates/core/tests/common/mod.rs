//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

/// Classical fourth-order Runge-Kutta for `u' = v^p`, `v' = u^q`, returning
/// `(u, v)` at each requested time (sorted ascending). Steps are `h` or
/// shorter so that every output time is hit exactly.
pub fn ode_rk4(p: f64, q: f64, u0: f64, v0: f64, times: &[f64], h: f64) -> Vec<(f64, f64)> {
    let rhs = |u: f64, v: f64| (v.max(0.0).powf(p), u.max(0.0).powf(q));
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut u, mut v) = (0.0f64, u0, v0);
    for &target in times {
        while t < target {
            let dt = h.min(target - t);
            let (a1, b1) = rhs(u, v);
            let (a2, b2) = rhs(u + 0.5 * dt * a1, v + 0.5 * dt * b1);
            let (a3, b3) = rhs(u + 0.5 * dt * a2, v + 0.5 * dt * b2);
            let (a4, b4) = rhs(u + dt * a3, v + dt * b3);
            u += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            v += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            t += dt;
            if (target - t).abs() < 1e-15 * target.max(1.0) {
                t = target;
            }
        }
        out.push((u, v));
    }
    out
}

/// Richardson-checked ODE values: the step is halved until two successive
/// answers agree to `1e-10` relative.
pub fn ode_reference(p: f64, q: f64, u0: f64, v0: f64, times: &[f64]) -> Vec<(f64, f64)> {
    let mut h = 1e-3;
    let mut prev = ode_rk4(p, q, u0, v0, times, h);
    loop {
        h /= 2.0;
        let next = ode_rk4(p, q, u0, v0, times, h);
        let worst = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| ((a.0 - b.0) / b.0).abs().max(((a.1 - b.1) / b.1).abs()))
            .fold(0.0f64, f64::max);
        if worst < 1e-10 || h < 1e-7 {
            return next;
        }
        prev = next;
    }
}

/// Blow-up time of the ODE with `u(0) = v(0) = a`, found by stepping until
/// the solution exceeds `1e12`, to within `h`.
pub fn ode_blowup_time(p: f64, q: f64, a: f64, h: f64) -> f64 {
    let (mut t, mut u, mut v) = (0.0f64, a, a);
    let rhs = |u: f64, v: f64| (v.powf(p), u.powf(q));
    while u < 1e12 && v < 1e12 && t < 1e6 {
        let (a1, b1) = rhs(u, v);
        let (a2, b2) = rhs(u + 0.5 * h * a1, v + 0.5 * h * b1);
        let (a3, b3) = rhs(u + 0.5 * h * a2, v + 0.5 * h * b2);
        let (a4, b4) = rhs(u + h * a3, v + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        t += h;
        if !(u.is_finite() && v.is_finite()) {
            break;
        }
    }
    t
}

/// Amplitude `a` with `u(0) = v(0) = a` whose ODE solution blows up at `t_star`.
pub fn amplitude_for_blowup(p: f64, q: f64, t_star: f64) -> f64 {
    let (mut lo, mut hi) = (1e-3f64, 1e3f64);
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if ode_blowup_time(p, q, mid, 1e-4 * t_star) > t_star {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Print one result line and return whether the criterion passed.
pub fn report(criterion: usize, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {criterion}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}
