//! Satisfiability solvers and structure counters.
//!
//! Solvers treat the clause list as a set: duplicate clauses,
//! duplicate in-clause literals, and tautologies are dropped before
//! solving (generators keep them; see the models module). Every
//! satisfying witness is checked against the original formula before
//! it is returned.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::models::{Clause, Formula, Hypergraph, Lit};

/// Largest bicycle chain length `count_bicycles` accepts.
pub const MAX_BICYCLE_L: usize = 12;
/// Largest snake length `count_snakes` accepts.
pub const MAX_SNAKE_S: usize = 9;
/// Variable cap for `solve_ksat_complete` at default call sites.
pub const DEFAULT_VAR_LIMIT: u32 = 40;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Satisfiable,
    Unsatisfiable,
}

/// Evidence attached to a verdict: the variable sharing a strongly
/// connected component with its negation, or the fact that a complete
/// search exhausted the space.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Certificate {
    ContradictoryScc { var: u32 },
    ExhaustiveSearch,
}

#[derive(Clone, PartialEq, Debug)]
pub struct SatResult {
    pub status: Status,
    pub witness: Option<Vec<bool>>,
    pub certificate: Option<Certificate>,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        self.status == Status::Satisfiable
    }
}

/// Implication graph of a 2-CNF formula. Node 2v-2 is variable v,
/// node 2v-1 its negation (label minus one). A clause (a or b)
/// contributes the arcs not-a -> b and not-b -> a; a tautological
/// clause contributes self-loops.
#[derive(Clone, Debug)]
pub struct ImplicationGraph {
    pub n_vars: u32,
    pub adj: Vec<Vec<u32>>,
}

impl ImplicationGraph {
    fn node(l: Lit) -> u32 {
        l.label() - 1
    }

    pub fn successors(&self, l: Lit) -> &[u32] {
        &self.adj[Self::node(l) as usize]
    }

    pub fn arc_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

fn check_width_2(f: &Formula) -> Result<()> {
    if f.k != 2 {
        return Err(Error::WrongClauseWidth {
            expected: 2,
            found: f.k,
        });
    }
    for c in &f.clauses {
        if c.literals.len() != 2 {
            return Err(Error::WrongClauseWidth {
                expected: 2,
                found: c.literals.len(),
            });
        }
    }
    Ok(())
}

/// Deduplicated clause set of a 2-CNF as sorted literal pairs.
fn clause_pairs(f: &Formula) -> HashSet<(Lit, Lit)> {
    f.clauses
        .iter()
        .map(|c| (c.literals[0], c.literals[1]))
        .collect()
}

pub fn build_implication_graph(f: &Formula) -> Result<ImplicationGraph> {
    check_width_2(f)?;
    let mut adj = vec![Vec::new(); 2 * f.n_vars as usize];
    for &(a, b) in &clause_pairs(f) {
        adj[ImplicationGraph::node(a.negate()) as usize].push(ImplicationGraph::node(b));
        adj[ImplicationGraph::node(b.negate()) as usize].push(ImplicationGraph::node(a));
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    Ok(ImplicationGraph {
        n_vars: f.n_vars,
        adj,
    })
}

const UNSET: u32 = u32::MAX;

/// Strongly connected components, iteratively. Returns a component id
/// per node; ids follow emission order, which is reverse topological
/// on the condensation.
pub fn tarjan_scc(adj: &[Vec<u32>]) -> Vec<u32> {
    let n = adj.len();
    let mut index = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSET; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, u32)> = Vec::new();
    let mut next_index = 0u32;
    let mut next_comp = 0u32;

    for root in 0..n as u32 {
        if index[root as usize] != UNSET {
            continue;
        }
        call.push((root, 0));
        while let Some((v, pos)) = call.pop() {
            let vi = v as usize;
            if pos == 0 {
                index[vi] = next_index;
                low[vi] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[vi] = true;
            }
            if (pos as usize) < adj[vi].len() {
                let w = adj[vi][pos as usize];
                call.push((v, pos + 1));
                if index[w as usize] == UNSET {
                    call.push((w, 0));
                } else if on_stack[w as usize] {
                    low[vi] = low[vi].min(index[w as usize]);
                }
            } else {
                if low[vi] == index[vi] {
                    loop {
                        let w = stack.pop().expect("scc stack underflow");
                        on_stack[w as usize] = false;
                        comp[w as usize] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
                if let Some(&(parent, _)) = call.last() {
                    let pi = parent as usize;
                    low[pi] = low[pi].min(low[vi]);
                }
            }
        }
    }
    comp
}

/// Decides a 2-CNF via strongly connected components of the
/// implication graph. Unsatisfiable exactly when some variable shares
/// a component with its negation; otherwise returns a verified witness
/// (a variable is set true when its node's component is emitted before
/// its negation's, i.e. comes later in topological order).
pub fn solve_2sat(f: &Formula) -> Result<SatResult> {
    let graph = build_implication_graph(f)?;
    let comp = tarjan_scc(&graph.adj);
    for v in 1..=f.n_vars {
        let pos = comp[(2 * v - 2) as usize];
        let neg = comp[(2 * v - 1) as usize];
        if pos == neg {
            return Ok(SatResult {
                status: Status::Unsatisfiable,
                witness: None,
                certificate: Some(Certificate::ContradictoryScc { var: v }),
            });
        }
    }
    let witness: Vec<bool> = (1..=f.n_vars)
        .map(|v| comp[(2 * v - 2) as usize] < comp[(2 * v - 1) as usize])
        .collect();
    assert!(
        f.is_satisfied_by(&witness),
        "2-SAT witness failed verification"
    );
    Ok(SatResult {
        status: Status::Satisfiable,
        witness: Some(witness),
        certificate: None,
    })
}

/// Complete search for k-CNF of any width, refusing formulas with more
/// than `var_limit` variables (40 by default at the call sites).
/// Davis-Putnam style: unit propagation, pure literal elimination,
/// then branching on the first literal of the first open clause.
pub fn solve_ksat_complete(f: &Formula, var_limit: u32) -> Result<SatResult> {
    if f.n_vars > var_limit {
        return Err(Error::VarLimitExceeded {
            n_vars: f.n_vars,
            limit: var_limit,
        });
    }
    let mut clauses: Vec<Vec<Lit>> = f
        .clauses
        .iter()
        .filter(|c| !c.is_tautology())
        .map(|c| {
            let mut lits = c.literals.clone();
            lits.dedup();
            lits
        })
        .collect();
    clauses.sort_unstable();
    clauses.dedup();

    let mut assign: Vec<Option<bool>> = vec![None; f.n_vars as usize];
    if dpll(&clauses, &mut assign) {
        let witness: Vec<bool> = assign.iter().map(|a| a.unwrap_or(false)).collect();
        assert!(
            f.is_satisfied_by(&witness),
            "complete-search witness failed verification"
        );
        Ok(SatResult {
            status: Status::Satisfiable,
            witness: Some(witness),
            certificate: None,
        })
    } else {
        Ok(SatResult {
            status: Status::Unsatisfiable,
            witness: None,
            certificate: Some(Certificate::ExhaustiveSearch),
        })
    }
}

fn dpll(clauses: &[Vec<Lit>], assign: &mut Vec<Option<bool>>) -> bool {
    // Reduce under the current assignment.
    let mut open: Vec<Vec<Lit>> = Vec::with_capacity(clauses.len());
    for c in clauses {
        let mut cur = Vec::with_capacity(c.len());
        let mut satisfied = false;
        for &l in c {
            match assign[(l.var - 1) as usize] {
                Some(value) if value != l.negated => {
                    satisfied = true;
                    break;
                }
                Some(_) => {}
                None => cur.push(l),
            }
        }
        if satisfied {
            continue;
        }
        if cur.is_empty() {
            return false;
        }
        open.push(cur);
    }
    if open.is_empty() {
        return true;
    }

    // Unit propagation: a forced assignment, no alternative on failure.
    if let Some(unit) = open.iter().find(|c| c.len() == 1) {
        let l = unit[0];
        assign[(l.var - 1) as usize] = Some(!l.negated);
        let ok = dpll(&open, assign);
        if !ok {
            assign[(l.var - 1) as usize] = None;
        }
        return ok;
    }

    // Pure literal elimination: setting a single-signed variable
    // favorably never loses a solution.
    let mut seen_pos: HashSet<u32> = HashSet::new();
    let mut seen_neg: HashSet<u32> = HashSet::new();
    for c in &open {
        for l in c {
            if l.negated {
                seen_neg.insert(l.var);
            } else {
                seen_pos.insert(l.var);
            }
        }
    }
    let pure = seen_pos
        .symmetric_difference(&seen_neg)
        .min()
        .copied();
    if let Some(v) = pure {
        assign[(v - 1) as usize] = Some(seen_pos.contains(&v));
        let ok = dpll(&open, assign);
        if !ok {
            assign[(v - 1) as usize] = None;
        }
        return ok;
    }

    // Branch on the first literal of the first open clause.
    let v = open[0][0].var;
    for value in [true, false] {
        assign[(v - 1) as usize] = Some(value);
        if dpll(&open, assign) {
            return true;
        }
    }
    assign[(v - 1) as usize] = None;
    false
}

/// Replaces every width-k clause by all k-choose-2 two-literal
/// subclauses, each inheriting the parent's provenance. Any satisfying
/// assignment of the projection satisfies the original formula.
pub fn project_to_2sat(f: &Formula) -> Formula {
    let clauses = f
        .clauses
        .iter()
        .flat_map(|c| {
            let lits = &c.literals;
            let prov = &c.provenance;
            (0..lits.len()).flat_map(move |i| {
                (i + 1..lits.len())
                    .map(move |j| Clause::new(vec![lits[i], lits[j]], prov.clone()))
            })
        })
        .collect();
    Formula {
        n_vars: f.n_vars,
        k: 2,
        clauses,
        record: None,
    }
}

fn all_literals(n_vars: u32) -> impl Iterator<Item = Lit> {
    (1..=2 * n_vars).map(Lit::from_label)
}

fn pair(a: Lit, b: Lit) -> (Lit, Lit) {
    if a <= b { (a, b) } else { (b, a) }
}

/// Arc successors map over literals: l -> m present iff the clause
/// (m or not-l) is in the set.
fn arc_successors(pairs: &HashSet<(Lit, Lit)>, n_vars: u32) -> Vec<Vec<Lit>> {
    let mut adj: Vec<Vec<Lit>> = vec![Vec::new(); 2 * n_vars as usize];
    for &(a, b) in pairs {
        adj[(a.negate().label() - 1) as usize].push(b);
        adj[(b.negate().label() - 1) as usize].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Counts bicycles per chain length 1..=l_max.
///
/// A bicycle of length L is an ordered tuple (u, w_1..w_L, v): the
/// w_i are literals on distinct variables chained by the clauses
/// (not-w_i or w_i+1), u and v are literals on the chain's own
/// variables, and the clauses (u or w_1) and (not-w_L or v) close the
/// ends. Degenerate closures such as u = w_1 count whenever the
/// corresponding clause exists. Counting is over the deduplicated
/// clause set of a formula that must be width 2.
pub fn count_bicycles(f: &Formula, l_max: usize) -> Result<BTreeMap<usize, u64>> {
    check_width_2(f)?;
    if !(1..=MAX_BICYCLE_L).contains(&l_max) {
        return Err(Error::LengthOutOfRange {
            value: l_max,
            lo: 1,
            hi: MAX_BICYCLE_L,
        });
    }
    let pairs = clause_pairs(f);
    let adj = arc_successors(&pairs, f.n_vars);
    let mut counts: BTreeMap<usize, u64> = (1..=l_max).map(|l| (l, 0)).collect();

    let mut chain: Vec<Lit> = Vec::with_capacity(l_max);
    let mut used: HashSet<u32> = HashSet::with_capacity(l_max);
    for w1 in all_literals(f.n_vars) {
        chain.push(w1);
        used.insert(w1.var);
        count_bicycle_chains(&pairs, &adj, l_max, &mut chain, &mut used, &mut counts);
        used.remove(&w1.var);
        chain.pop();
    }
    Ok(counts)
}

fn count_bicycle_chains(
    pairs: &HashSet<(Lit, Lit)>,
    adj: &[Vec<Lit>],
    l_max: usize,
    chain: &mut Vec<Lit>,
    used: &mut HashSet<u32>,
    counts: &mut BTreeMap<usize, u64>,
) {
    let w1 = chain[0];
    let w_last = *chain.last().expect("chain never empty");
    let mut closures = 0u64;
    let mut openings = 0u64;
    for &w in chain.iter() {
        for cand in [w, w.negate()] {
            if pairs.contains(&pair(cand, w1)) {
                openings += 1;
            }
            if pairs.contains(&pair(w_last.negate(), cand)) {
                closures += 1;
            }
        }
    }
    *counts.get_mut(&chain.len()).expect("length in range") += openings * closures;

    if chain.len() == l_max {
        return;
    }
    for &next in &adj[(w_last.label() - 1) as usize] {
        if used.contains(&next.var) {
            continue;
        }
        chain.push(next);
        used.insert(next.var);
        count_bicycle_chains(pairs, adj, l_max, chain, used, counts);
        used.remove(&next.var);
        chain.pop();
    }
}

/// Counts snakes of odd length s.
///
/// A snake is an ordered tuple (w_1..w_s) of literals on distinct
/// variables, s = 2t - 1, whose s + 1 clauses (w_t or w_1),
/// (not-w_i or w_i+1) for i < s, and (not-w_s or not-w_t) all appear
/// in the deduplicated clause set.
pub fn count_snakes(f: &Formula, s: usize) -> Result<u64> {
    check_width_2(f)?;
    if !(1..=MAX_SNAKE_S).contains(&s) {
        return Err(Error::LengthOutOfRange {
            value: s,
            lo: 1,
            hi: MAX_SNAKE_S,
        });
    }
    if s % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "snake length must be odd, got {s}"
        )));
    }
    let pairs = clause_pairs(f);
    if s == 1 {
        // Single-literal snake: both (w or w) and (not-w or not-w)
        // must be clauses.
        return Ok(all_literals(f.n_vars)
            .filter(|&w| {
                pairs.contains(&pair(w, w)) && pairs.contains(&pair(w.negate(), w.negate()))
            })
            .count() as u64);
    }

    let adj = arc_successors(&pairs, f.n_vars);
    let t = s.div_ceil(2);
    let mut total = 0u64;
    let mut used: HashSet<u32> = HashSet::with_capacity(s);
    for &(a, b) in &pairs {
        // The anchor clause (w_t or w_1) fixes both ends of a search:
        // each orientation assigns one literal to w_t and one to w_1.
        for (wt, w1) in [(a, b), (b, a)] {
            if wt.var == w1.var {
                continue;
            }
            used.insert(wt.var);
            used.insert(w1.var);
            total += extend_snake(&pairs, &adj, s, t, wt, w1, 2, &mut used);
            used.clear();
        }
    }
    Ok(total)
}

fn extend_snake(
    pairs: &HashSet<(Lit, Lit)>,
    adj: &[Vec<Lit>],
    s: usize,
    t: usize,
    wt: Lit,
    prev: Lit,
    position: usize,
    used: &mut HashSet<u32>,
) -> u64 {
    if position > s {
        return if pairs.contains(&pair(prev.negate(), wt.negate())) {
            1
        } else {
            0
        };
    }
    let mut total = 0u64;
    if position == t {
        // The reserved middle literal: it must be reachable by an arc
        // from the previous position like any other step.
        if adj[(prev.label() - 1) as usize].binary_search(&wt).is_ok() {
            total += extend_snake(pairs, adj, s, t, wt, wt, position + 1, used);
        }
        return total;
    }
    for &next in &adj[(prev.label() - 1) as usize] {
        if used.contains(&next.var) {
            continue;
        }
        used.insert(next.var);
        total += extend_snake(pairs, adj, s, t, wt, next, position + 1, used);
        used.remove(&next.var);
    }
    total
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ComponentStats {
    pub component_count: usize,
    pub largest: usize,
    pub connected: bool,
}

/// Connected components of a width-2 hypergraph via union-find.
/// An empty graph counts as connected.
pub fn component_stats(g: &Hypergraph) -> Result<ComponentStats> {
    if g.k != 2 {
        return Err(Error::WrongArity {
            expected: 2,
            found: g.k,
        });
    }
    let n = g.vertex_count;
    let mut parent: Vec<u32> = (0..n as u32).collect();

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }

    for e in &g.edges {
        debug_assert_eq!(e.len(), 2);
        let (a, b) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
        if a != b {
            parent[a as usize] = b;
        }
    }
    let mut size: BTreeMap<u32, usize> = BTreeMap::new();
    for v in 0..n as u32 {
        let root = find(&mut parent, v);
        *size.entry(root).or_insert(0) += 1;
    }
    let component_count = size.len();
    let largest = size.values().copied().max().unwrap_or(0);
    Ok(ComponentStats {
        component_count,
        largest,
        connected: component_count <= 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clause2(a: i64, b: i64) -> Clause {
        Clause::new(
            vec![Lit::from_dimacs(a).unwrap(), Lit::from_dimacs(b).unwrap()],
            vec![],
        )
    }

    fn formula2(n_vars: u32, spec: &[(i64, i64)]) -> Formula {
        Formula {
            n_vars,
            k: 2,
            clauses: spec.iter().map(|&(a, b)| clause2(a, b)).collect(),
            record: None,
        }
    }

    #[test]
    fn implication_graph_has_contrapositive_arcs() {
        let f = formula2(2, &[(1, 2)]);
        let g = build_implication_graph(&f).unwrap();
        assert_eq!(g.successors(Lit::negative(1)), &[2]); // not-x1 -> x2
        assert_eq!(g.successors(Lit::negative(2)), &[0]); // not-x2 -> x1
        assert_eq!(g.arc_count(), 2);
    }

    #[test]
    fn tautology_becomes_self_loops() {
        let f = formula2(1, &[(1, -1)]);
        let g = build_implication_graph(&f).unwrap();
        assert_eq!(g.successors(Lit::positive(1)), &[0]);
        assert_eq!(g.successors(Lit::negative(1)), &[1]);
    }

    #[test]
    fn trivially_sat_and_unsat() {
        let sat = formula2(2, &[(1, 2), (-1, 2)]);
        let res = solve_2sat(&sat).unwrap();
        assert!(res.is_sat());
        assert!(sat.is_satisfied_by(res.witness.as_ref().unwrap()));

        let unsat = formula2(1, &[(1, 1), (-1, -1)]);
        let res = solve_2sat(&unsat).unwrap();
        assert_eq!(res.status, Status::Unsatisfiable);
        assert_eq!(
            res.certificate,
            Some(Certificate::ContradictoryScc { var: 1 })
        );
    }

    #[test]
    fn complete_search_agrees_on_small_cases() {
        let unsat = formula2(2, &[(1, 2), (-1, 2), (1, -2), (-1, -2)]);
        let res = solve_ksat_complete(&unsat, 40).unwrap();
        assert_eq!(res.status, Status::Unsatisfiable);
        assert_eq!(res.certificate, Some(Certificate::ExhaustiveSearch));

        let sat = formula2(3, &[(1, 2), (-2, 3)]);
        assert!(solve_ksat_complete(&sat, 40).unwrap().is_sat());
    }

    #[test]
    fn complete_search_respects_var_limit() {
        let f = formula2(41, &[(1, 2)]);
        assert!(matches!(
            solve_ksat_complete(&f, 40),
            Err(Error::VarLimitExceeded { .. })
        ));
    }

    #[test]
    fn projection_expands_to_all_pairs() {
        let f = Formula {
            n_vars: 3,
            k: 3,
            clauses: vec![Clause::new(
                vec![Lit::positive(1), Lit::negative(2), Lit::positive(3)],
                vec![0, 1, 2],
            )],
            record: None,
        };
        let p = project_to_2sat(&f);
        assert_eq!(p.k, 2);
        assert_eq!(p.clauses.len(), 3);
        assert!(p.clauses.iter().all(|c| c.provenance == vec![0, 1, 2]));
    }

    #[test]
    fn snake_formula_is_unsat_and_counted() {
        // The length-3 snake on variables 1..3.
        let f = formula2(3, &[(1, 2), (-1, 2), (-2, 3), (-3, -2)]);
        assert_eq!(solve_2sat(&f).unwrap().status, Status::Unsatisfiable);
        assert!(count_snakes(&f, 3).unwrap() >= 1);
    }

    #[test]
    fn snake_rejects_even_length() {
        let f = formula2(1, &[]);
        assert!(count_snakes(&f, 4).is_err());
        assert!(count_snakes(&f, 11).is_err());
    }

    #[test]
    fn unit_style_bicycle_of_length_one() {
        // Chains are ordered literal sequences, so w1 = x and its
        // mirror w1 = !x count separately: 2 bicycles of length 1.
        let f = formula2(1, &[(1, 1), (-1, -1)]);
        let counts = count_bicycles(&f, 3).unwrap();
        assert_eq!(counts[&1], 2);
        assert_eq!(counts[&2], 0);
    }

    #[test]
    fn component_stats_counts_isolated_vertices() {
        let g = Hypergraph {
            vertex_count: 4,
            k: 2,
            edges: vec![vec![0, 1], vec![1, 2]],
        };
        let stats = component_stats(&g).unwrap();
        assert_eq!(stats.component_count, 2);
        assert_eq!(stats.largest, 3);
        assert!(!stats.connected);

        let empty = Hypergraph {
            vertex_count: 0,
            k: 2,
            edges: vec![],
        };
        assert!(component_stats(&empty).unwrap().connected);
    }
}
