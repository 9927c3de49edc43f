use paraslab::profiles::make_optimal_profile;
use paraslab::semigroup::apply_semigroup_radial;
use paraslab::{Case, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `S(t)μ(0) = E μ(Y)` with `Y ~ N(0, 2t I_3)`.
#[test]
fn radial_semigroup_matches_monte_carlo() {
    let params = SystemParams::unit(3, 2.0, 3.0).unwrap();
    let pair = make_optimal_profile(&params, Case::A, 1.0, 1.0, None).unwrap();
    let t = 0.01;
    let quad = apply_semigroup_radial(&pair.mu, 1.0, t, &[0.0]).unwrap()[0];

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples = 10_000_000;
    let scale = (2.0 * t).sqrt();
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let r2: f64 = (0..3)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * z
            })
            .sum::<f64>()
            * scale
            * scale;
        // μ = |x|^{-1.2} on the unit ball
        let v = if r2 < 1.0 { r2.powf(-0.6) } else { 0.0 };
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let stderr = ((sum_sq / n - mean * mean) / n).sqrt();
    assert!(
        (quad - mean).abs() <= 3.0 * stderr,
        "quadrature {quad}, Monte-Carlo {mean} ± {stderr}"
    );
}
