//! Helpers shared by the integration test binaries.
#![allow(dead_code)]

use geosat::models::{Clause, Formula, Lit};
use geosat::rng::RngStream;
use rand::Rng;

/// Uniform random 2-CNF: n ~ U(2..=n_max) variables, m ~ U(1..=6n)
/// clauses, each literal an independent uniform variable and sign.
/// Tautologies and repeated variables happen naturally.
pub fn random_2cnf(n_max: u32, rng: &mut RngStream) -> Formula {
    let n = rng.random_range(2..=n_max);
    let m = rng.random_range(1..=6 * n);
    random_kcnf(n, m, 2, rng)
}

pub fn random_kcnf(n: u32, m: u32, k: usize, rng: &mut RngStream) -> Formula {
    let clauses = (0..m)
        .map(|_| {
            let lits = (0..k)
                .map(|_| Lit {
                    var: rng.random_range(1..=n),
                    negated: rng.random_bool(0.5),
                })
                .collect();
            Clause::new(lits, Vec::new())
        })
        .collect();
    Formula {
        n_vars: n,
        k,
        clauses,
        record: None,
    }
}

/// Exhaustive satisfiability by truth table; n_vars must stay small.
pub fn truth_table_sat(f: &Formula) -> bool {
    let n = f.n_vars as usize;
    assert!(n <= 24, "truth table limited to 24 variables");
    (0u64..(1 << n)).any(|mask| {
        let assignment: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
        f.is_satisfied_by(&assignment)
    })
}
