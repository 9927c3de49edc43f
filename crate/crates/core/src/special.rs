//! Small special-function helpers.

use std::f64::consts::PI;

/// Γ(n/2) for a positive integer n, by half-integer recursion.
pub fn gamma_half(n: usize) -> f64 {
    assert!(n >= 1, "gamma_half needs n >= 1");
    let (mut value, mut k) = if n % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    while k < n {
        value *= k as f64 / 2.0;
        k += 2;
    }
    value
}

/// Surface area of the unit sphere S^{n-1} in R^n.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Volume of the unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `e^{-z} I_ν(z)` for `ν = two_nu / 2` and `z ≥ 0`: power series below
/// `z = 30`, the large-argument expansion above.
pub fn scaled_bessel_i(two_nu: usize, z: f64) -> f64 {
    let nu = two_nu as f64 / 2.0;
    if z <= 0.0 {
        return if two_nu == 0 { 1.0 } else { 0.0 };
    }
    if z < 30.0 {
        let h = z / 2.0;
        let mut term = h.powf(nu) / gamma_half(two_nu + 2);
        let mut sum = term;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= h * h / (k * (k + nu));
            sum += term;
            k += 1.0;
        }
        return sum * (-z).exp();
    }
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}

/// Least-squares slope of y against x.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..n {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn scaled_bessel_matches_references() {
        // I0(1), I1(1)
        assert!((scaled_bessel_i(0, 1.0) * 1f64.exp() - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((scaled_bessel_i(2, 1.0) * 1f64.exp() - 0.565_159_103_992_485_0).abs() < 1e-14);
        // I_{1/2}(z) = sqrt(2/(πz)) sinh z, on both sides of the switch
        for z in [0.3, 5.0, 29.9, 30.1, 200.0] {
            let exact = (2.0 / (PI * z)).sqrt() * 0.5 * (-(-2.0 * z).exp_m1());
            assert!((scaled_bessel_i(1, z) / exact - 1.0).abs() < 1e-13, "z={z}");
        }
        // e^{-z} I0(z) = (1/π) ∫_0^π e^{z(cos θ - 1)} dθ
        for z in [29.0, 31.0, 100.0] {
            let q = crate::quadrature::gauss_kronrod(
                |t: f64| (z * (t.cos() - 1.0)).exp(),
                0.0,
                PI,
                crate::quadrature::Tolerance::rel(1e-15),
            )
            .unwrap()
            .value
                / PI;
            assert!((scaled_bessel_i(0, z) / q - 1.0).abs() < 1e-13, "z={z}");
        }
    }

    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        for n in 1..15 {
            let fact: f64 = (1..n).map(|k| k as f64).product();
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "{n}");
        }
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn gamma_half_matches_lanczos() {
        for n in 1..20 {
            assert!((gamma_half(n).ln() - ln_gamma(n as f64 / 2.0)).abs() < 1e-12);
        }
    }
}
