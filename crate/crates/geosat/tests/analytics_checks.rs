//! Closed-form checks: worked values, Monte Carlo oracles for the
//! probability formulas, series summation for moments, and ordering
//! and limit properties of the bounds.

use geosat::analytics::{
    Kind, bicycle_bound, clique_prob, coarse_radius, connectivity_radius, expected_clauses,
    expected_paths, expected_snakes, expected_snakes_exact, ksat_bounds, poisson_moment,
    threshold_2sat, triple_probs, u_k_bound, wedge_prob,
};
use geosat::geometry::{Boundary, Metric};
use geosat::models::{Model, ModelParams};
use geosat::rng::stream;
use rand::Rng;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

fn params(model: Model, n: u64, k: usize, d: usize, param: f64) -> ModelParams {
    ModelParams {
        model,
        n,
        k,
        d,
        param,
        metric: Metric::Linf,
        boundary: Boundary::Torus,
    }
}

#[test]
fn clique_prob_worked_values() {
    let v = clique_prob(3, 1, 0.1, Boundary::Cube).unwrap();
    assert!(close(v.value, 0.028, 1e-12));
    assert_eq!(v.kind, Kind::Exact);

    let v = clique_prob(2, 2, 0.5, Boundary::Cube).unwrap();
    assert!(close(v.value, 0.5625, 1e-12));

    for d in 1..=4 {
        assert_eq!(clique_prob(2, d, 1.0, Boundary::Cube).unwrap().value, 1.0);
        assert_eq!(clique_prob(2, d, 3.0, Boundary::Cube).unwrap().value, 1.0);
    }

    let v = clique_prob(2, 1, 0.2, Boundary::Torus).unwrap();
    assert!(close(v.value, 0.4, 1e-12));
    assert_eq!(v.kind, Kind::Exact);

    let v = clique_prob(3, 1, 0.05, Boundary::Torus).unwrap();
    assert!(close(v.value, 3.0 * 0.05f64.powi(2), 1e-12));
    assert_eq!(v.kind, Kind::LeadingOrder);
}

#[test]
fn clique_prob_matches_pair_sampling_on_the_cube() {
    let samples = 1_000_000u64;
    let mut rng = stream(101);
    for &rho in &[0.05f64, 0.2, 0.5] {
        let formula = clique_prob(2, 2, rho, Boundary::Cube).unwrap().value;
        let mut hits = 0u64;
        for _ in 0..samples {
            let close_pair = (0..2).all(|_| {
                let a: f64 = rng.random();
                let b: f64 = rng.random();
                (a - b).abs() <= rho
            });
            hits += close_pair as u64;
        }
        let p = hits as f64 / samples as f64;
        let sigma = (formula * (1.0 - formula) / samples as f64).sqrt();
        assert!(
            (p - formula).abs() < 3.0 * sigma,
            "rho {rho}: sampled {p}, formula {formula}"
        );
    }
}

#[test]
fn clique_prob_matches_triple_sampling_on_the_torus() {
    // Below rho = 1/3 the three-point torus expression is exact, not
    // just leading order: a triple that is pairwise close without
    // fitting in one arc needs all gaps <= rho, impossible for
    // 3 rho < 1.
    let samples = 1_000_000u64;
    let rho = 0.05;
    let formula = clique_prob(3, 1, rho, Boundary::Torus).unwrap().value;
    let mut rng = stream(103);
    let mut hits = 0u64;
    for _ in 0..samples {
        let xs: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let gap = |a: f64, b: f64| {
            let g = (a - b).abs();
            g.min(1.0 - g)
        };
        let ok = gap(xs[0], xs[1]) <= rho && gap(xs[0], xs[2]) <= rho && gap(xs[1], xs[2]) <= rho;
        hits += ok as u64;
    }
    let p = hits as f64 / samples as f64;
    let sigma = (formula * (1.0 - formula) / samples as f64).sqrt();
    assert!(
        (p - formula).abs() < 3.0 * sigma,
        "sampled {p}, formula {formula}"
    );
}

#[test]
fn expected_clause_counts_hit_their_anchors() {
    let gamma_star = 2f64.powf(-1.5);
    for n in [100u64, 1000, 100_000] {
        let v = expected_clauses(&params(Model::Gamma, n, 2, 2, gamma_star)).unwrap();
        assert!(close(v.value, n as f64, 1e-12));
        let v = expected_clauses(&params(Model::Mu, n, 2, 2, gamma_star)).unwrap();
        assert!(close(v.value, n as f64, 1e-12));
    }
    let v = expected_clauses(&params(Model::Mu, 1000, 3, 1, 1.0)).unwrap();
    assert!(close(v.value, 4000.0, 1e-12));
    assert!(expected_clauses(&params(Model::Tilde, 10, 2, 1, 0.2)).is_err());
}

#[test]
fn thresholds_match_the_stated_constants() {
    assert!(close(threshold_2sat(Model::Gamma, 1).unwrap().value, 0.25, 1e-15));
    assert!(close(threshold_2sat(Model::Mu, 1).unwrap().value, 0.5, 1e-15));
    let v = threshold_2sat(Model::Mu, 2).unwrap().value;
    assert!(close(v, 0.35355339059327373, 1e-15));
    assert!(close(
        threshold_2sat(Model::Gamma, 2).unwrap().value,
        2f64.powf(-1.5),
        1e-15
    ));
    assert!(threshold_2sat(Model::Tilde, 1).is_err());
}

#[test]
fn ksat_bounds_worked_values_and_ordering() {
    let (lo, hi) = ksat_bounds(3, 1, Model::Gamma).unwrap();
    assert!(close(lo.value, 0.25, 1e-15));
    assert!(close(hi.value, 2.0, 1e-15));
    assert_eq!(hi.kind, Kind::UpperBound);

    let (lo, hi) = ksat_bounds(3, 1, Model::Mu).unwrap();
    assert!(close(lo.value, 0.5, 1e-15));
    assert!(close(hi.value, 3.0 + std::f64::consts::LN_2, 1e-15));

    let (lo, hi) = ksat_bounds(4, 2, Model::Gamma).unwrap();
    assert!(close(lo.value, 2f64.powf(-1.5), 1e-15));
    assert!(close(hi.value, 3f64.sqrt(), 1e-15));

    for k in 3..=6 {
        for d in 1..=4 {
            for model in [Model::Gamma, Model::Mu] {
                let (lo, hi) = ksat_bounds(k, d, model).unwrap();
                assert!(lo.value < hi.value, "k={k} d={d} {model:?}");
                // The width-2 threshold is the k-SAT lower bound.
                assert_eq!(lo.value, threshold_2sat(model, d).unwrap().value);
            }
        }
    }
    assert!(ksat_bounds(2, 1, Model::Gamma).is_err());
}

/// Brute-force E[N^order] by summing the Poisson pmf far past the mean.
fn series_moment(mu: f64, order: u32) -> f64 {
    let mut sum = 0.0;
    let mut p = (-mu).exp();
    for j in 0..200u64 {
        sum += p * (j as f64).powi(order as i32);
        p *= mu / (j + 1) as f64;
    }
    sum
}

#[test]
fn poisson_moments_match_series_summation() {
    assert_eq!(poisson_moment(1.0, 1).unwrap().value, 1.0);
    assert_eq!(poisson_moment(1.0, 2).unwrap().value, 2.0);
    assert_eq!(poisson_moment(1.0, 3).unwrap().value, 5.0);
    assert_eq!(poisson_moment(1.0, 4).unwrap().value, 15.0);
    assert_eq!(poisson_moment(0.0, 4).unwrap().value, 0.0);
    for &mu in &[0.1f64, 1.0, 5.0] {
        for order in 1..=4u32 {
            let closed = poisson_moment(mu, order).unwrap().value;
            let series = series_moment(mu, order);
            assert!(
                (closed - series).abs() < 1e-10,
                "mu {mu} order {order}: closed {closed} vs series {series}"
            );
        }
    }
    assert!(poisson_moment(1.0, 0).is_err());
    assert!(poisson_moment(1.0, 5).is_err());
}

#[test]
fn wedge_and_triple_worked_values() {
    let v = wedge_prob(1.0, 1, 1000).unwrap();
    assert!(close(v.value, 8e-6, 1e-12));

    let (path, star) = triple_probs(1.0, 1, 1000).unwrap();
    let n3 = 1000f64.powi(3);
    assert!(close(path.value, 32.0 / n3, 1e-12));
    assert!(close(star.value, 40.0 / n3, 1e-12));

    assert!(wedge_prob(0.0, 1, 1000).is_err());
    assert!(wedge_prob(1.0, 1, 0).is_err());
}

#[test]
fn snake_expectations_worked_values() {
    let p = params(Model::Gamma, 50, 2, 1, 0.6);
    let exact = expected_snakes_exact(&p, 3).unwrap();
    // C(50,3) * 3! * 2^3 * (2 * 0.6/50)^4
    let want = 19600.0 * 6.0 * 8.0 * 0.024f64.powi(4);
    assert!(close(exact.value, want, 1e-12));
    assert_eq!(exact.kind, Kind::Exact);

    let leading = expected_snakes(&p, 3).unwrap();
    let want_leading = 100f64.powi(3) * (1.2f64 / 50.0).powi(4);
    assert!(close(leading.value, want_leading, 1e-12));
    assert_eq!(leading.kind, Kind::LeadingOrder);

    assert!(expected_snakes(&p, 2).is_err());
    assert!(expected_snakes_exact(&p, 4).is_err());

    let mu_params = params(Model::Mu, 100, 2, 1, 0.3);
    let v = expected_snakes(&mu_params, 5).unwrap();
    let base = 2f64.powi(2) * 0.3f64.powi(2);
    let want = 2f64.powi(3) * (0.3f64 + 0.09).powi(2) / 100.0 * base.powi(4);
    assert!(close(v.value, want, 1e-12));
}

#[test]
fn path_expectations_are_flat_at_criticality() {
    for d in 1..=3 {
        let gamma_star = threshold_2sat(Model::Gamma, d).unwrap().value;
        let mu_star = threshold_2sat(Model::Mu, d).unwrap().value;
        for l in [1usize, 5, 9] {
            let v = expected_paths(&params(Model::Gamma, 700, 2, d, gamma_star), l).unwrap();
            assert!(close(v.value, 1400.0, 1e-12), "gamma d={d} L={l}");
            let v = expected_paths(&params(Model::Mu, 700, 2, d, mu_star), l).unwrap();
            assert!(close(v.value, 1400.0, 1e-12), "mu d={d} L={l}");
        }
    }
}

#[test]
fn bicycle_bound_worked_value() {
    let p = params(Model::Mu, 1000, 2, 1, 0.4);
    let v = bicycle_bound(&p, 2).unwrap();
    let mu: f64 = 0.4;
    let n = 1000f64;
    let want = n.powi(2)
        * 2f64.powi(2)
        * 16.0
        * ((mu * mu + 3.0 * mu + 1.0) / (mu * mu))
        * (2.0 * mu * mu / n).powi(3);
    assert!(close(v.value, want, 1e-12));
    assert_eq!(v.kind, Kind::UpperBound);
    assert!(bicycle_bound(&params(Model::Gamma, 1000, 2, 1, 0.4), 2).is_err());
}

#[test]
fn coarse_radius_and_u_k_bound() {
    let u2 = u_k_bound(2).unwrap();
    assert!(close(u2.value, 16.0 * std::f64::consts::LN_2, 1e-15));
    assert!(u2.value > 11.09 && u2.value < 11.091);
    let u3 = u_k_bound(3).unwrap();
    assert!(u3.value > 12.23 && u3.value < 12.24);
    assert_eq!(u3.kind, Kind::UpperBound);
    assert!(u_k_bound(1).is_err());

    // Larger U pushes the exponent toward 1/d, so the radius grows
    // toward gamma * n^{-1/d} from below.
    let mut last = 0.0;
    for u in [4.0f64, 8.0, 32.0, 1024.0] {
        let v = coarse_radius(2, 2, 0.7, 10_000, Some(u)).unwrap().value;
        assert!(v > last);
        last = v;
    }
    let scale = 0.7 * 10_000f64.powf(-0.5);
    assert!(last < scale);
    assert!((scale - last) / scale < 0.01);

    let defaulted = coarse_radius(2, 1, 1.0, 1 << 20, None).unwrap();
    // ceil(11.09) = 12 stands in for U(2): exponent 12/11.
    assert!(close(
        defaulted.value,
        ((1u64 << 20) as f64).powf(-12.0 / 11.0),
        1e-12
    ));
    assert!(coarse_radius(2, 1, 1.0, 100, Some(1.0)).is_err());
}

#[test]
fn connectivity_radius_worked_values() {
    let v = connectivity_radius(10_000, 2, Metric::Linf).unwrap();
    assert!(v.value > 0.015174 && v.value < 0.015175);

    // l2 volume at d=2 is pi, so the radii differ by sqrt(4/pi).
    let linf = connectivity_radius(5000, 2, Metric::Linf).unwrap().value;
    let l2 = connectivity_radius(5000, 2, Metric::L2).unwrap().value;
    assert!(close(l2 / linf, (4.0 / std::f64::consts::PI).sqrt(), 1e-12));

    let mut last = f64::INFINITY;
    for n in [100u64, 1000, 10_000, 100_000] {
        let v = connectivity_radius(n, 2, Metric::Linf).unwrap().value;
        assert!(v < last, "r_c should fall as n grows");
        last = v;
    }
    assert!(connectivity_radius(1, 2, Metric::Linf).is_err());
}
