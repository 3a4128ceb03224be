//! Closed-form quantities for the point-process formula models:
//! clique-in-ball probabilities, expected clause counts, threshold
//! constants and bounds, Poisson moments, small clause-pattern
//! probabilities, and radius formulas.
//!
//! Every value carries a `kind` tag so callers know the comparison
//! regime: `exact` values admit tight tolerances, `leading_order`
//! values carry vanishing finite-size corrections, `upper_bound`
//! values only bound. Per-coordinate product forms assume the sup
//! metric throughout; the torus variants are the ones that make
//! leading-order pair probabilities exact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Boundary, Metric};
use crate::models::{Model, ModelParams};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Exact,
    LeadingOrder,
    UpperBound,
}

/// A closed-form value with its comparison regime and a stable
/// formula identifier (the id the CLI and the verification suites
/// address it by).
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct AnalyticValue {
    pub value: f64,
    pub kind: Kind,
    pub formula_id: &'static str,
}

impl AnalyticValue {
    fn new(value: f64, kind: Kind, formula_id: &'static str) -> Self {
        AnalyticValue {
            value,
            kind,
            formula_id,
        }
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    Ok(())
}

fn check_finite_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be nonnegative and finite, got {v}"
        )));
    }
    Ok(())
}

fn check_finite_pos(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Binomial coefficient as a float, exact step by step.
fn binomial(n: u64, k: usize) -> f64 {
    if (k as u64) > n {
        return 0.0;
    }
    let mut c = 1.0;
    for i in 0..k as u64 {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Probability that k independent uniform points on [0,1]^d are
/// pairwise within rho in the sup metric.
///
/// Cube: the per-coordinate range statistic gives the exact
/// q = k rho^(k-1) - (k-1) rho^k, and the answer is q^d. Torus:
/// k = 2 has the exact q = min(1, 2 rho); for k >= 3 only the
/// leading-order k rho^(k-1) is provided.
pub fn clique_prob(k: usize, d: usize, rho: f64, boundary: Boundary) -> Result<AnalyticValue> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "clique size must be at least 2, got {k}"
        )));
    }
    check_dimension(d)?;
    check_finite_nonneg("rho", rho)?;
    let (q, kind, id) = match boundary {
        Boundary::Cube => {
            let q = if rho >= 1.0 {
                1.0
            } else {
                let kf = k as f64;
                (kf * rho.powi(k as i32 - 1) - (kf - 1.0) * rho.powi(k as i32)).min(1.0)
            };
            (q, Kind::Exact, "clique_prob.cube")
        }
        Boundary::Torus => {
            if k == 2 {
                ((2.0 * rho).min(1.0), Kind::Exact, "clique_prob.torus")
            } else {
                let q = (k as f64 * rho.powi(k as i32 - 1)).min(1.0);
                (q, Kind::LeadingOrder, "clique_prob.torus")
            }
        }
    };
    Ok(AnalyticValue::new(q.powi(d as i32), kind, id))
}

/// Leading-order expected clause count of the gamma and mu models.
pub fn expected_clauses(p: &ModelParams) -> Result<AnalyticValue> {
    check_dimension(p.d)?;
    let (kf, df, nf) = (p.k as f64, p.d as f64, p.n as f64);
    match p.model {
        Model::Gamma => {
            check_finite_pos("gamma", p.param)?;
            let value = 2f64.powi(p.k as i32) * p.param.powf(df * (kf - 1.0)) * kf.powf(df)
                / factorial(p.k)
                * nf;
            Ok(AnalyticValue::new(
                value,
                Kind::LeadingOrder,
                "expected_clauses.gamma",
            ))
        }
        Model::Mu => {
            check_finite_nonneg("mu", p.param)?;
            let value = (2.0 * p.param).powi(p.k as i32) * kf.powf(df) / factorial(p.k) * nf;
            Ok(AnalyticValue::new(
                value,
                Kind::LeadingOrder,
                "expected_clauses.mu",
            ))
        }
        other => Err(Error::WrongModel(format!(
            "expected_clauses needs the gamma or mu model, got {other:?}"
        ))),
    }
}

/// Sharp 2-SAT threshold constants: gamma* = 2^-(1+1/d),
/// mu* = 2^-((d+1)/2).
pub fn threshold_2sat(model: Model, d: usize) -> Result<AnalyticValue> {
    check_dimension(d)?;
    let df = d as f64;
    match model {
        Model::Gamma => Ok(AnalyticValue::new(
            2f64.powf(-(1.0 + 1.0 / df)),
            Kind::Exact,
            "threshold_2sat.gamma",
        )),
        Model::Mu => Ok(AnalyticValue::new(
            2f64.powf(-(df + 1.0) / 2.0),
            Kind::Exact,
            "threshold_2sat.mu",
        )),
        other => Err(Error::WrongModel(format!(
            "threshold_2sat needs the gamma or mu model, got {other:?}"
        ))),
    }
}

/// Satisfiability bounds for k >= 3: below the lower value the formula
/// is satisfiable whp, above the upper value unsatisfiable whp.
pub fn ksat_bounds(k: usize, d: usize, model: Model) -> Result<(AnalyticValue, AnalyticValue)> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "ksat_bounds needs k >= 3, got {k}"
        )));
    }
    check_dimension(d)?;
    let df = d as f64;
    match model {
        Model::Gamma => Ok((
            AnalyticValue::new(
                2f64.powf(-(1.0 + 1.0 / df)),
                Kind::Exact,
                "ksat_bounds.gamma.lower",
            ),
            AnalyticValue::new(
                ((k - 1) as f64).powf(1.0 / df),
                Kind::UpperBound,
                "ksat_bounds.gamma.upper",
            ),
        )),
        Model::Mu => Ok((
            AnalyticValue::new(
                2f64.powf(-(df + 1.0) / 2.0),
                Kind::Exact,
                "ksat_bounds.mu.lower",
            ),
            AnalyticValue::new(
                k as f64 + std::f64::consts::LN_2,
                Kind::UpperBound,
                "ksat_bounds.mu.upper",
            ),
        )),
        other => Err(Error::WrongModel(format!(
            "ksat_bounds needs the gamma or mu model, got {other:?}"
        ))),
    }
}

/// Raw Poisson moments E[N^order] for N ~ Poisson(mu), orders 1..=4.
pub fn poisson_moment(mu: f64, order: u32) -> Result<AnalyticValue> {
    check_finite_nonneg("mu", mu)?;
    let (value, id) = match order {
        1 => (mu, "poisson_moment.m1"),
        2 => (mu * mu + mu, "poisson_moment.m2"),
        3 => (mu * mu * mu + 3.0 * mu * mu + mu, "poisson_moment.m3"),
        4 => (
            mu * mu * mu * mu + 6.0 * mu * mu * mu + 7.0 * mu * mu + mu,
            "poisson_moment.m4",
        ),
        other => return Err(Error::UnsupportedMomentOrder(other)),
    };
    Ok(AnalyticValue::new(value, Kind::Exact, id))
}

/// Leading-order probability that two fixed clauses sharing one
/// literal both appear in the mu model: 2^2d mu^2 (mu + mu^2) / n^2.
pub fn wedge_prob(mu: f64, d: usize, n: u64) -> Result<AnalyticValue> {
    check_finite_pos("mu", mu)?;
    check_dimension(d)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nf = n as f64;
    let value = 4f64.powi(d as i32) * mu * mu * (mu + mu * mu) / (nf * nf);
    Ok(AnalyticValue::new(value, Kind::LeadingOrder, "wedge_prob"))
}

/// Leading-order probabilities of the two three-clause patterns on
/// four fixed literals in the mu model: the path (l1,l2),(l2,l3),
/// (l3,l4) and the star (l1,l2),(l1,l3),(l1,l4).
pub fn triple_probs(mu: f64, d: usize, n: u64) -> Result<(AnalyticValue, AnalyticValue)> {
    check_finite_pos("mu", mu)?;
    check_dimension(d)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let n3 = (n as f64).powi(3);
    let scale = 8f64.powi(d as i32) * mu.powi(4) / n3;
    let path = scale * (mu + 1.0) * (mu + 1.0);
    let star = scale * (mu * mu + 3.0 * mu + 1.0);
    Ok((
        AnalyticValue::new(path, Kind::LeadingOrder, "triple_path"),
        AnalyticValue::new(star, Kind::LeadingOrder, "triple_star"),
    ))
}

fn check_snake_length(s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::InvalidParameter("snake length must be odd".into()));
    }
    if s % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "snake length must be odd, got {s}"
        )));
    }
    Ok(())
}

/// Leading-order expected count of snakes of odd length s.
pub fn expected_snakes(p: &ModelParams, s: usize) -> Result<AnalyticValue> {
    check_snake_length(s)?;
    check_dimension(p.d)?;
    let (nf, df, sf) = (p.n as f64, p.d as f64, s as i32);
    match p.model {
        Model::Gamma => {
            check_finite_pos("gamma", p.param)?;
            let pair = (2.0 * p.param).powf(df) / nf;
            let value = (2.0 * nf).powi(sf) * pair.powi(sf + 1);
            Ok(AnalyticValue::new(
                value,
                Kind::LeadingOrder,
                "expected_snakes.gamma",
            ))
        }
        Model::Mu => {
            check_finite_pos("mu", p.param)?;
            let mu = p.param;
            let head = 2f64.powf(2.0 * df + 1.0) * (mu + mu * mu).powi(2) / nf;
            let step = 2f64.powf(df + 1.0) * mu * mu;
            Ok(AnalyticValue::new(
                head * step.powi(sf - 1),
                Kind::LeadingOrder,
                "expected_snakes.mu",
            ))
        }
        other => Err(Error::WrongModel(format!(
            "expected_snakes needs the gamma or mu model, got {other:?}"
        ))),
    }
}

/// Exact-combinatorial expected snake count for the gamma model:
/// C(n,s) s! 2^s p^(s+1) with p the pair probability at rho =
/// gamma n^(-1/d). Exact on the torus, leading-order on the cube
/// (where p itself depends on the pair's position).
pub fn expected_snakes_exact(p: &ModelParams, s: usize) -> Result<AnalyticValue> {
    check_snake_length(s)?;
    if p.model != Model::Gamma {
        return Err(Error::WrongModel(format!(
            "expected_snakes_exact needs the gamma model, got {:?}",
            p.model
        )));
    }
    check_dimension(p.d)?;
    check_finite_pos("gamma", p.param)?;
    let rho = p.param * (p.n as f64).powf(-1.0 / p.d as f64);
    let pair = clique_prob(2, p.d, rho, p.boundary)?;
    let value =
        binomial(p.n, s) * factorial(s) * 2f64.powi(s as i32) * pair.value.powi(s as i32 + 1);
    let kind = match p.boundary {
        Boundary::Torus => Kind::Exact,
        Boundary::Cube => Kind::LeadingOrder,
    };
    Ok(AnalyticValue::new(value, kind, "expected_snakes_exact"))
}

/// Leading-order expected count of directed literal paths of length L:
/// 2n (2 (2 gamma)^d)^(L-1) for the gamma model,
/// 2n (2^(d+1) mu^2)^(L-1) for the mu model. At the 2-SAT threshold
/// the geometric base is 1 and the value is 2n for every L.
pub fn expected_paths(p: &ModelParams, l: usize) -> Result<AnalyticValue> {
    if l == 0 {
        return Err(Error::InvalidParameter("path length must be >= 1".into()));
    }
    check_dimension(p.d)?;
    let (nf, df) = (p.n as f64, p.d as f64);
    let base = match p.model {
        Model::Gamma => {
            check_finite_pos("gamma", p.param)?;
            2.0 * (2.0 * p.param).powf(df)
        }
        Model::Mu => {
            check_finite_pos("mu", p.param)?;
            2f64.powf(df + 1.0) * p.param * p.param
        }
        other => {
            return Err(Error::WrongModel(format!(
                "expected_paths needs the gamma or mu model, got {other:?}"
            )));
        }
    };
    let id = match p.model {
        Model::Gamma => "expected_paths.gamma",
        _ => "expected_paths.mu",
    };
    Ok(AnalyticValue::new(
        2.0 * nf * base.powi(l as i32 - 1),
        Kind::LeadingOrder,
        id,
    ))
}

/// Upper bound on the expected number of bicycles of length L in the
/// mu model: n^L 2^L (2L)^2 ((mu^2 + 3mu + 1) / mu^2) (2^d mu^2 / n)^(L+1).
pub fn bicycle_bound(p: &ModelParams, l: usize) -> Result<AnalyticValue> {
    if l == 0 {
        return Err(Error::InvalidParameter(
            "bicycle length must be >= 1".into(),
        ));
    }
    if p.model != Model::Mu {
        return Err(Error::WrongModel(format!(
            "bicycle_bound needs the mu model, got {:?}",
            p.model
        )));
    }
    check_dimension(p.d)?;
    check_finite_pos("mu", p.param)?;
    let (nf, mu, lf) = (p.n as f64, p.param, l as f64);
    let value = nf.powi(l as i32)
        * 2f64.powi(l as i32)
        * (2.0 * lf).powi(2)
        * ((mu * mu + 3.0 * mu + 1.0) / (mu * mu))
        * (2f64.powi(p.d as i32) * mu * mu / nf).powi(l as i32 + 1);
    Ok(AnalyticValue::new(value, Kind::UpperBound, "bicycle_bound.mu"))
}

/// Upper bound on U(k), the least number of variables in an
/// unsatisfiable k-CNF whose clauses use pairwise distinct variable
/// sets: (ln 2)^(1/(k-1)) (2k)^(k/(k-1)).
pub fn u_k_bound(k: usize) -> Result<AnalyticValue> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "u_k_bound needs k >= 2, got {k}"
        )));
    }
    let kf = k as f64;
    let value = std::f64::consts::LN_2.powf(1.0 / (kf - 1.0)) * (2.0 * kf).powf(kf / (kf - 1.0));
    Ok(AnalyticValue::new(value, Kind::UpperBound, "u_k_bound"))
}

/// Radius gamma n^(-U/(d(U-1))) of the coarse-threshold regime. With
/// no override, U is the ceiling of `u_k_bound`, so the radius is an
/// upper bound for the true-U radius; callers knowing U(k) exactly can
/// supply it.
pub fn coarse_radius(
    k: usize,
    d: usize,
    gamma: f64,
    n: u64,
    u_exact: Option<f64>,
) -> Result<AnalyticValue> {
    check_dimension(d)?;
    check_finite_pos("gamma", gamma)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let (u, kind) = match u_exact {
        Some(u) => {
            if !(u > 1.0) || !u.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "U must be finite and > 1, got {u}"
                )));
            }
            (u, Kind::Exact)
        }
        None => (u_k_bound(k)?.value.ceil(), Kind::UpperBound),
    };
    let exponent = u / (d as f64 * (u - 1.0));
    Ok(AnalyticValue::new(
        gamma * (n as f64).powf(-exponent),
        kind,
        "coarse_radius",
    ))
}

/// Gamma(d/2 + 1) for integer d, via factorials and the half-integer
/// ladder.
fn gamma_half_plus_one(d: usize) -> f64 {
    if d % 2 == 0 {
        factorial(d / 2)
    } else {
        let m = (d + 1) / 2;
        std::f64::consts::PI.sqrt() * factorial(2 * m) / (4f64.powi(m as i32) * factorial(m))
    }
}

/// Connectivity threshold radius r_c = (ln n / (n V_d))^(1/d) with
/// V_d the unit-ball volume of the metric: 2^d for sup, the standard
/// pi^(d/2)/Gamma(d/2+1) for Euclidean.
pub fn connectivity_radius(n: u64, d: usize, metric: Metric) -> Result<AnalyticValue> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "connectivity_radius needs n >= 2, got {n}"
        )));
    }
    check_dimension(d)?;
    let v_d = match metric {
        Metric::Linf => 2f64.powi(d as i32),
        Metric::L2 => std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half_plus_one(d),
    };
    let nf = n as f64;
    let value = (nf.ln() / (nf * v_d)).powf(1.0 / d as f64);
    Ok(AnalyticValue::new(value, Kind::Exact, "connectivity_radius"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clique_prob_saturates_at_unit_diameter() {
        for d in [1, 2, 3] {
            let v = clique_prob(2, d, 1.0, Boundary::Cube).unwrap();
            assert_eq!(v.value, 1.0);
            assert_eq!(v.kind, Kind::Exact);
        }
    }

    #[test]
    fn unit_ball_volume_cases() {
        assert!((gamma_half_plus_one(2) - 1.0).abs() < 1e-15);
        let v2 = connectivity_radius(100, 2, Metric::L2).unwrap().value;
        let by_pi = (100f64.ln() / (100.0 * std::f64::consts::PI)).sqrt();
        assert!((v2 - by_pi).abs() < 1e-15);
    }

    #[test]
    fn binomial_small_cases() {
        assert_eq!(binomial(50, 3), 19600.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn moment_orders_beyond_four_are_rejected() {
        assert!(matches!(
            poisson_moment(1.0, 5),
            Err(Error::UnsupportedMomentOrder(5))
        ));
        assert!(matches!(
            poisson_moment(1.0, 0),
            Err(Error::UnsupportedMomentOrder(0))
        ));
    }

    #[test]
    fn snake_length_must_be_odd() {
        let p = ModelParams {
            model: Model::Gamma,
            n: 50,
            k: 2,
            d: 1,
            param: 0.6,
            metric: Metric::Linf,
            boundary: Boundary::Torus,
        };
        assert!(expected_snakes(&p, 2).is_err());
        assert!(expected_snakes_exact(&p, 4).is_err());
        assert!(expected_snakes(&p, 3).is_ok());
    }
}
