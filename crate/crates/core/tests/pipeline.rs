use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use remote_rdf::{
    brute_force_rdf, build_channel, classical_scalar_rdf, conditional_stats, distortion_range,
    fixtures, rate_of_channel, rdf_curve, solve_waterfill, spectral_setup, verify_structure,
    wyner_scalar_rdf, Error, OracleResolution,
};

#[test]
fn waterfill_channel_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for k in 0..30 {
        let spec = fixtures::random_feasible_spec(&mut rng, 1 + k % 3, 1 + k % 2);
        let stats = conditional_stats(&spec).unwrap();
        let setup = spectral_setup(&stats).unwrap();
        let (lo, hi) = distortion_range(&setup);
        let delta = lo + rng.random_range(0.02..1.1) * (hi - lo);
        let sol = solve_waterfill(&setup, delta).unwrap();
        assert!((sol.sigma_delta.trace() - delta.min(hi)).abs() < 1e-8);

        let ch = build_channel(&spec, &stats, &sol.sigma_delta).unwrap();
        let rates = rate_of_channel(&spec, &ch).unwrap();
        assert!(
            (rates.rate() - sol.rate).abs() < 1e-8,
            "{} vs {}",
            rates.rate(),
            sol.rate
        );
        assert!(rates.discrepancy() < 1e-8);
        assert!(verify_structure(&spec, &ch).all_pass());
    }
}

#[test]
fn oracle_never_beats_waterfill() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let res = OracleResolution {
        eigen_points: 120,
        angle_points: 60,
        refine_rounds: 4,
    };
    for k in 0..8 {
        let spec = fixtures::random_feasible_spec(&mut rng, 1 + k % 2, 1);
        let setup = spectral_setup(&conditional_stats(&spec).unwrap()).unwrap();
        let (lo, hi) = distortion_range(&setup);
        let delta = lo + rng.random_range(0.2..0.9) * (hi - lo);
        let wf = solve_waterfill(&setup, delta).unwrap().rate;
        let oracle = brute_force_rdf(&spec, delta, res).unwrap();
        assert!(
            oracle.rate >= wf - 1e-9,
            "oracle {} below {}",
            oracle.rate,
            wf
        );
        assert!(oracle.rate - wf <= res.tolerance());
    }
}

#[test]
fn degenerate_limits_match_closed_forms() {
    for q in [0.3, 1.0, 4.0] {
        let wyner = fixtures::wyner_spec(q, -1.3);
        let classical = fixtures::classical_spec(q);
        for frac in [0.05, 0.5, 0.99, 1.0, 2.0] {
            let delta = frac * q;
            let w = spectral_setup(&conditional_stats(&wyner).unwrap()).unwrap();
            let c = spectral_setup(&conditional_stats(&classical).unwrap()).unwrap();
            let rw = solve_waterfill(&w, delta).unwrap().rate;
            let rc = solve_waterfill(&c, delta).unwrap().rate;
            assert!((rw - wyner_scalar_rdf(q, delta).rate).abs() < 1e-12);
            assert!((rc - classical_scalar_rdf(q, delta).rate).abs() < 1e-12);
        }
    }
}

#[test]
fn curve_marks_points_below_range() {
    let spec = fixtures::scalar_example();
    let curve = rdf_curve(&spec, &[0.1, 0.25, 0.3, 0.5, 0.6]).unwrap();
    assert_eq!(curve.lower, 0.25);
    let codes: Vec<_> = curve
        .points
        .iter()
        .map(|p| p.outcome.as_ref().err().map(Error::code))
        .collect();
    assert_eq!(
        codes,
        [Some("below_range"), Some("below_range"), None, None, None]
    );
    assert!(matches!(
        curve.points[1].outcome,
        Err(Error::BelowRange {
            at_boundary: true,
            ..
        })
    ));
    assert_eq!(curve.solved().last().unwrap().1, 0.0);
}
