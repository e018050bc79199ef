use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::SplitError;
use crate::policy::{Group, PolicyExpr, Universe};

/// How an AND node divides the index set it receives among its operands.
#[derive(Debug, Clone)]
pub enum Partitioner {
    /// Contiguous runs of near-equal size, larger runs first.
    BalancedContiguous,
    /// Uniformly shuffled, cut at random points into non-empty parts.
    Random(Box<ChaCha20Rng>),
}

impl Partitioner {
    pub fn random(seed: u64) -> Self {
        Partitioner::Random(Box::new(ChaCha20Rng::seed_from_u64(seed)))
    }

    fn split(&mut self, indices: &[usize], parts: usize) -> Vec<Vec<usize>> {
        match self {
            Partitioner::BalancedContiguous => balanced_contiguous(indices, parts),
            Partitioner::Random(rng) => {
                let mut shuffled = indices.to_vec();
                shuffled.shuffle(rng);
                let mut cuts: Vec<usize> = index::sample(rng, indices.len() - 1, parts - 1)
                    .into_iter()
                    .map(|c| c + 1)
                    .collect();
                cuts.sort_unstable();
                let mut out = Vec::with_capacity(parts);
                let mut start = 0;
                for cut in cuts.into_iter().chain([shuffled.len()]) {
                    let mut part = shuffled[start..cut].to_vec();
                    part.sort_unstable();
                    out.push(part);
                    start = cut;
                }
                out
            }
        }
    }
}

/// Splits `indices` (in order) into `parts` contiguous runs whose sizes
/// differ by at most one. Requires `1 <= parts <= indices.len()`.
pub fn balanced_contiguous(indices: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let base = indices.len() / parts;
    let extra = indices.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for i in 0..parts {
        let len = base + usize::from(i < extra);
        out.push(indices[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Each holder's set of prime indices produced by a monotone split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneSplit {
    sets: BTreeMap<String, BTreeSet<usize>>,
}

impl MonotoneSplit {
    pub fn holders(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(String::as_str)
    }

    pub fn indices_of(&self, holder: &str) -> Option<&BTreeSet<usize>> {
        self.sets.get(holder)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<usize>)> {
        self.sets.iter().map(|(h, s)| (h.as_str(), s))
    }

    /// Union of the index sets held by the members of `group`.
    pub fn union_for(&self, universe: &Universe, group: Group) -> BTreeSet<usize> {
        group
            .members()
            .filter_map(|i| self.sets.get(universe.name(i)))
            .flatten()
            .copied()
            .collect()
    }
}

/// Minimal CNF clause of a monotone policy, with the AND choices that produce it.
#[derive(Debug, Clone)]
struct Clause {
    /// Bitmask over the policy's variables.
    holders: u64,
    /// AND node (pre-order id) -> operand taken.
    choices: BTreeMap<usize, usize>,
}

/// Caps the intermediate clause products of nested ORs.
const MAX_CLAUSE_PRODUCT: usize = 1 << 20;

fn minimize(clauses: Vec<Clause>) -> Vec<Clause> {
    let mut kept: Vec<Clause> = Vec::new();
    for (i, c) in clauses.iter().enumerate() {
        let subsumed = clauses.iter().enumerate().any(|(j, d)| {
            d.holders & c.holders == d.holders && (d.holders != c.holders || j < i)
        });
        if !subsumed {
            kept.push(c.clone());
        }
    }
    kept
}

/// Clauses whose conjunction is equivalent to `expr`, with no clause a
/// superset of another. Each is the set of variables an index reaches
/// when it takes one operand at every AND it meets.
fn minimal_clauses(
    expr: &PolicyExpr,
    vars: &[&str],
    next_id: &mut usize,
) -> Result<Vec<Clause>, SplitError> {
    let id = *next_id;
    *next_id += 1;
    match expr {
        PolicyExpr::Var(name) => {
            let bit = vars.iter().position(|v| v == name).expect("collected from expr");
            Ok(vec![Clause {
                holders: 1 << bit,
                choices: BTreeMap::new(),
            }])
        }
        PolicyExpr::And(children) => {
            let mut all = Vec::new();
            for (j, child) in children.iter().enumerate() {
                for mut clause in minimal_clauses(child, vars, next_id)? {
                    clause.choices.insert(id, j);
                    all.push(clause);
                }
            }
            Ok(minimize(all))
        }
        PolicyExpr::Or(children) => {
            let mut acc = vec![Clause {
                holders: 0,
                choices: BTreeMap::new(),
            }];
            for child in children {
                let theirs = minimal_clauses(child, vars, next_id)?;
                if acc.len() * theirs.len() > MAX_CLAUSE_PRODUCT {
                    return Err(SplitError::InsufficientPrimes {
                        needed: acc.len() * theirs.len(),
                        available: 0,
                    });
                }
                let product = acc
                    .iter()
                    .flat_map(|a| {
                        theirs.iter().map(move |b| Clause {
                            holders: a.holders | b.holders,
                            choices: a.choices.iter().chain(&b.choices).map(|(k, v)| (*k, *v)).collect(),
                        })
                    })
                    .collect();
                acc = minimize(product);
            }
            Ok(acc)
        }
        PolicyExpr::Not(_) => Err(SplitError::NonMonotone),
    }
}

/// Benaloh-Leichter split of `indices` along a monotone policy. An OR hands
/// every operand a copy of its index set, an AND partitions its set among
/// the operands, and each holder ends up with the union of what its
/// variables received.
///
/// The AND partitions are not chosen independently: sibling OR branches
/// that split the same indices in unrelated ways let their pieces combine
/// into covers for unauthorized groups. Instead the indices are divided
/// into one block per minimal CNF clause of the policy (using
/// `partitioner`), and every index follows its clause's AND choices. A
/// group then covers every index iff it meets every minimal clause, i.e.
/// iff it satisfies the policy. This needs at least as many indices as
/// the policy has minimal clauses.
pub fn bl_split(
    expr: &PolicyExpr,
    indices: &[usize],
    partitioner: &mut Partitioner,
) -> Result<MonotoneSplit, SplitError> {
    if !expr.is_monotone() {
        return Err(SplitError::NonMonotone);
    }
    let vars = expr.variables();
    if vars.len() > 64 {
        return Err(SplitError::TooManyVariables(vars.len()));
    }
    let clauses = minimal_clauses(expr, &vars, &mut 0)?;

    let mut ordered = indices.to_vec();
    ordered.sort_unstable();
    ordered.dedup();
    if ordered.len() < clauses.len() {
        return Err(SplitError::InsufficientPrimes {
            needed: clauses.len(),
            available: ordered.len(),
        });
    }
    let routed: Vec<(usize, &Clause)> = partitioner
        .split(&ordered, clauses.len())
        .into_iter()
        .zip(&clauses)
        .flat_map(|(block, clause)| block.into_iter().map(move |i| (i, clause)))
        .collect();

    fn descend(
        expr: &PolicyExpr,
        routed: Vec<(usize, &Clause)>,
        next_id: &mut usize,
        out: &mut BTreeMap<String, BTreeSet<usize>>,
    ) {
        let id = *next_id;
        *next_id += 1;
        match expr {
            PolicyExpr::Var(name) => {
                if !routed.is_empty() {
                    out.entry(name.clone())
                        .or_default()
                        .extend(routed.iter().map(|(i, _)| *i));
                }
            }
            PolicyExpr::Or(children) => {
                for child in children {
                    descend(child, routed.clone(), next_id, out);
                }
            }
            PolicyExpr::And(children) => {
                for (j, child) in children.iter().enumerate() {
                    let part = routed
                        .iter()
                        .filter(|(_, c)| c.choices.get(&id) == Some(&j))
                        .cloned()
                        .collect();
                    descend(child, part, next_id, out);
                }
            }
            PolicyExpr::Not(_) => unreachable!("checked monotone"),
        }
    }
    let mut sets = BTreeMap::new();
    descend(expr, routed, &mut 0, &mut sets);
    Ok(MonotoneSplit { sets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::parse;
    use crate::policy::tests::arb_expr;
    use proptest::prelude::*;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn balanced_runs() {
        let idx: Vec<usize> = (0..12).collect();
        assert_eq!(
            balanced_contiguous(&idx, 2),
            vec![(0..6).collect::<Vec<_>>(), (6..12).collect()]
        );
        assert_eq!(
            balanced_contiguous(&idx[..7], 3),
            vec![vec![0, 1, 2], vec![3, 4], vec![5, 6]]
        );
    }

    #[test]
    fn three_holder_split() {
        let u = Universe::from_list("A1,A2,A3").unwrap();
        let expr = parse("(A1 and A2) or (A1 and A3)", &u).unwrap();
        let idx: Vec<usize> = (0..8).collect();
        let split = bl_split(&expr, &idx, &mut Partitioner::BalancedContiguous).unwrap();
        assert_eq!(split.indices_of("A1"), Some(&set(&[0, 1, 2, 3])));
        assert_eq!(split.indices_of("A2"), Some(&set(&[4, 5, 6, 7])));
        assert_eq!(split.indices_of("A3"), Some(&set(&[4, 5, 6, 7])));
    }

    #[test]
    fn single_variable_gets_everything() {
        let u = Universe::from_list("A").unwrap();
        let expr = parse("A", &u).unwrap();
        let idx: Vec<usize> = (0..8).collect();
        let split = bl_split(&expr, &idx, &mut Partitioner::BalancedContiguous).unwrap();
        assert_eq!(split.indices_of("A"), Some(&set(&idx)));
    }

    #[test]
    fn too_few_indices() {
        let u = Universe::from_list("A,B,C").unwrap();
        let expr = parse("A and B and C", &u).unwrap();
        assert_eq!(
            bl_split(&expr, &[0, 1], &mut Partitioner::BalancedContiguous),
            Err(SplitError::InsufficientPrimes {
                needed: 3,
                available: 2
            })
        );
    }

    #[test]
    fn rejects_negation() {
        let u = Universe::from_list("A,B").unwrap();
        let expr = parse("A and not B", &u).unwrap();
        assert_eq!(
            bl_split(&expr, &[0, 1, 2], &mut Partitioner::BalancedContiguous),
            Err(SplitError::NonMonotone)
        );
    }

    #[test]
    fn airplane_split_needs_a_pair() {
        let u = Universe::from_list("A,B,C,D,E").unwrap();
        let expr = parse("(A and B) or ((A or B) and (C or D or E))", &u).unwrap();
        let idx: Vec<usize> = (0..12).collect();
        let split = bl_split(&expr, &idx, &mut Partitioner::BalancedContiguous).unwrap();
        // minimal clauses {A,B}, {A,C,D,E}, {B,C,D,E} take four indices each
        assert_eq!(split.indices_of("A"), Some(&set(&[0, 1, 2, 3, 4, 5, 6, 7])));
        assert_eq!(split.indices_of("B"), Some(&set(&[0, 1, 2, 3, 8, 9, 10, 11])));
        for h in ["C", "D", "E"] {
            assert_eq!(split.indices_of(h), Some(&set(&[4, 5, 6, 7, 8, 9, 10, 11])));
        }
        let all = set(&idx);
        for g in u.all_groups() {
            assert_eq!(split.union_for(&u, g) == all, expr.evaluate_group(&u, g));
        }
    }

    #[test]
    fn sibling_branches_do_not_mix() {
        // Independent halves/thirds in the two OR branches would let B, C
        // and D jointly cover everything.
        let u = Universe::from_list("A,B,C,D,E").unwrap();
        let expr = parse("(A or B) and E or A and D and C", &u).unwrap();
        let idx: Vec<usize> = (0..8).collect();
        let split = bl_split(&expr, &idx, &mut Partitioner::BalancedContiguous).unwrap();
        let bcd = u.group(&["B", "C", "D"]).unwrap();
        assert_ne!(split.union_for(&u, bcd), set(&idx));
    }

    #[test]
    fn random_partition_is_seeded() {
        let u = Universe::from_list("A,B,C,D,E").unwrap();
        let expr = parse("(A and B) or ((A or B) and (C or D or E))", &u).unwrap();
        let idx: Vec<usize> = (0..12).collect();
        let a = bl_split(&expr, &idx, &mut Partitioner::random(5)).unwrap();
        let b = bl_split(&expr, &idx, &mut Partitioner::random(5)).unwrap();
        assert_eq!(a, b);
    }

    fn covering_equals_satisfaction(expr: &PolicyExpr, n: usize, partitioner: &mut Partitioner) {
        let u = Universe::from_list("A,B,C,D,E").unwrap();
        let idx: Vec<usize> = (0..n).collect();
        let all: BTreeSet<usize> = idx.iter().copied().collect();
        match bl_split(expr, &idx, partitioner) {
            Ok(split) => {
                for g in u.all_groups() {
                    assert_eq!(
                        split.union_for(&u, g) == all,
                        expr.evaluate_group(&u, g),
                        "{expr} with group {}",
                        u.label(g)
                    );
                }
            }
            Err(SplitError::InsufficientPrimes { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    proptest! {
        #[test]
        fn split_covers_exactly_the_satisfying_groups(
            expr in arb_expr(5, false),
            n in prop::sample::select(vec![8usize, 12]),
            seed: u64,
        ) {
            covering_equals_satisfaction(&expr, n, &mut Partitioner::BalancedContiguous);
            covering_equals_satisfaction(&expr, n, &mut Partitioner::random(seed));
        }

        #[test]
        fn random_parts_are_a_partition(len in 1usize..20, k in 1usize..20, seed: u64) {
            prop_assume!(k <= len);
            let idx: Vec<usize> = (100..100 + len).collect();
            let parts = Partitioner::random(seed).split(&idx, k);
            prop_assert_eq!(parts.len(), k);
            prop_assert!(parts.iter().all(|p| !p.is_empty()));
            let mut flat: Vec<usize> = parts.concat();
            flat.sort_unstable();
            prop_assert_eq!(flat, idx);
        }
    }
}
