use paraslab::diagnostics::lemma23_log_integral;
use paraslab::harness::RunConfig;
use paraslab::profiles::{scale_profile, RadialDensity, RadialProfile, Side};
use paraslab::semigroup::{apply_semigroup_grid, DuhamelRule, GridField, TimeGrid};
use paraslab::{classify, derive_exponents, Case, SystemParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SystemParams> {
    (1usize..=5, 0.05f64..6.0, 0.0f64..1.0)
        .prop_map(|(n, p, s)| (n, p, p + s * (8.0 - p)))
        .prop_filter_map("pq > 1", |(n, p, q)| SystemParams::unit(n, p, q).ok())
}

fn field(values: Vec<f64>) -> GridField {
    let mut f = GridField::zeros(1, values.len(), 10.0).unwrap();
    // keep the data well inside the box so the tail criterion holds
    let m = values.len();
    for (i, v) in values.into_iter().enumerate() {
        if i >= m / 4 && i < 3 * m / 4 {
            f.values[i] = v;
        }
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exactly_one_case_holds(p in params()) {
        let holding: Vec<Case> = Case::ALL.into_iter().filter(|c| c.holds(&p)).collect();
        prop_assert_eq!(holding.len(), 1);
        prop_assert_eq!(holding[0], classify(&p).label);
    }

    #[test]
    fn exponents_are_consistent(p in params()) {
        let e = derive_exponents(&p);
        prop_assert!((e.lambda_mu - 2.0 * e.scal_u).abs() < 1e-12 * e.lambda_mu.max(1.0));
        prop_assert!((e.lambda_nu - 2.0 * e.scal_v).abs() < 1e-12 * e.lambda_nu.max(1.0));
        // p·scal_v = scal_u + 1 and q·scal_u = scal_v + 1
        prop_assert!((p.p * e.scal_v - e.scal_u - 1.0).abs() < 1e-9 * e.scal_u.max(1.0));
        prop_assert!((p.q * e.scal_u - e.scal_v - 1.0).abs() < 1e-9 * e.scal_v.max(1.0));
    }

    #[test]
    fn semigroup_keeps_mass_and_sign(values in prop::collection::vec(0.0f64..5.0, 128), t in 1e-4f64..0.5) {
        let f = field(values);
        let g = apply_semigroup_grid(&f, 1.0, t).unwrap();
        prop_assert!(g.min() >= 0.0);
        prop_assert!((g.mass() - f.mass()).abs() <= 1e-12 * f.mass().max(1.0));
        prop_assert!(g.sup() <= f.sup() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn semigroup_obeys_jensen(values in prop::collection::vec(0.0f64..5.0, 128), t in 1e-3f64..0.5) {
        // Φ(s) = s²: S(t)φ ≤ (S(t)φ²)^{1/2}
        let f = field(values);
        let lhs = apply_semigroup_grid(&f, 1.0, t).unwrap();
        let rhs = apply_semigroup_grid(&f.map(|v| v * v), 1.0, t).unwrap();
        for (a, b) in lhs.values.iter().zip(&rhs.values) {
            prop_assert!(*a <= b.max(0.0).sqrt() + 1e-9);
        }
    }

    #[test]
    fn time_grid_weights_sum_to_horizon(t_end in 1e-3f64..10.0, count in 2usize..200, ratio in 1.01f64..2.0) {
        let g = match TimeGrid::new(t_end, count, ratio) {
            Ok(g) => g,
            Err(_) => {
                // only grids whose smallest gap is below rounding may be refused
                prop_assert!(ratio.powi((count / 2) as i32) > 1e12);
                return Ok(());
            }
        };
        prop_assert!(g.nodes[0] > 0.0 && g.nodes.windows(2).all(|w| w[1] > w[0]));
        let total: f64 = g.weights.iter().sum();
        prop_assert!((total - t_end).abs() <= 1e-12 * t_end);
        for rule in [DuhamelRule::LeftEndpoint, DuhamelRule::Simpson] {
            let w = g.duhamel_weights(rule);
            let last: f64 = w[count - 1].iter().sum();
            prop_assert!((last - t_end).abs() <= 1e-10 * t_end);
            prop_assert!(w.iter().flatten().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn log_integral_ratio_brackets(a in -0.9f64..3.0, b in -3.0f64..3.0, t in 1e-6f64..0.95) {
        let r = lemma23_log_integral(a, b, t).unwrap();
        let flat = 1.0 / (a + 1.0);
        if b <= 0.0 {
            prop_assert!(r.ratio <= flat + 1e-10);
        } else {
            prop_assert!(r.ratio >= flat - 1e-10);
        }
    }

    #[test]
    fn scaling_is_a_group(power in 0.0f64..0.9, big_t in 0.05f64..20.0, r in 1e-3f64..0.9) {
        let p = SystemParams::unit(1, 4.0, 4.0).unwrap();
        let mu = RadialProfile::power_law(1, 1.0, power).unwrap().with_cutoff(1.0).unwrap();
        let there = scale_profile(&mu, &p, big_t, Side::U).unwrap();
        let back = scale_profile(&there, &p, 1.0 / big_t, Side::U).unwrap();
        prop_assert!((back.value(r) / mu.value(r) - 1.0).abs() < 1e-12);
        let s = derive_exponents(&p).scal_u;
        let direct = big_t.powf(s) * mu.value(big_t.sqrt() * r * 0.5);
        prop_assert!((there.value(0.5 * r) - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn resolved_config_round_trips(n in 1usize..=3, c1 in 1e-3f64..10.0, nodes in 8usize..100) {
        let text = format!("task = \"evolve\"\n[params]\nn = {n}\np = \"5/3\"\nq = 3\n[profile]\nkind = \"constant\"\nc1 = {c1}\n[time]\nnodes = {nodes}\n");
        let cfg = RunConfig::from_toml_str(&text).unwrap().resolve().unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap().resolve().unwrap();
        prop_assert_eq!(cfg, again);
    }
}
