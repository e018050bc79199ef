//! Slot plans for exact (possibly non-monotone) group families.
//!
//! A slot partitions the prime indices into `k` parts and assigns some
//! holders to parts. It authenticates a group iff the group holds exactly
//! one member of every part and nobody else: only then does the merged
//! response reproduce the challenge without extra or missing terms.

use std::collections::{BTreeMap, BTreeSet};

use super::monotone::balanced_contiguous;
use super::SplitError;
use crate::policy::{Group, GroupFamily, Universe};

/// Families at most this large try every remaining group as a packing seed.
const EXHAUSTIVE_SEED_LIMIT: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotAssignment {
    parts: Vec<BTreeSet<usize>>,
    /// Universe position of a holder -> part index.
    member_part: BTreeMap<usize, usize>,
}

impl SlotAssignment {
    pub fn new(
        parts: Vec<BTreeSet<usize>>,
        member_part: BTreeMap<usize, usize>,
        prime_count: usize,
    ) -> Result<Self, SplitError> {
        let invalid = |why: &str| Err(SplitError::InvalidSlot(why.to_owned()));
        if parts.is_empty() {
            return invalid("a slot needs at least one part");
        }
        if parts.iter().any(BTreeSet::is_empty) {
            return invalid("slot parts must be non-empty");
        }
        let mut seen = BTreeSet::new();
        for &i in parts.iter().flatten() {
            if i >= prime_count || !seen.insert(i) {
                return invalid("slot parts must be disjoint prime indices below the prime count");
            }
        }
        if seen.len() != prime_count {
            return invalid("slot parts must cover every prime index");
        }
        if member_part.values().any(|&p| p >= parts.len()) {
            return invalid("holder assigned to a nonexistent part");
        }
        let staffed: BTreeSet<usize> = member_part.values().copied().collect();
        if staffed.len() != parts.len() {
            return invalid("every part needs at least one holder");
        }
        Ok(Self { parts, member_part })
    }

    pub fn parts(&self) -> &[BTreeSet<usize>] {
        &self.parts
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn part_of(&self, holder: usize) -> Option<usize> {
        self.member_part.get(&holder).copied()
    }

    /// Holders assigned to each part.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.parts.len()];
        for (&holder, &part) in &self.member_part {
            classes[part].push(holder);
        }
        classes
    }

    /// Groups with exactly one member per part and no unassigned members.
    pub fn authorized_groups(&self) -> GroupFamily {
        transversals(&self.classes()).into_iter().collect()
    }
}

/// Every group picking one holder from each class.
fn transversals(classes: &[Vec<usize>]) -> Vec<Group> {
    classes.iter().fold(vec![Group::EMPTY], |acc, class| {
        acc.iter()
            .flat_map(|g| class.iter().map(move |&h| g.with(h)))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotPlan {
    universe: Universe,
    prime_count: usize,
    slots: Vec<SlotAssignment>,
}

impl SlotPlan {
    pub fn new(
        universe: Universe,
        prime_count: usize,
        slots: Vec<SlotAssignment>,
    ) -> Result<Self, SplitError> {
        if slots.is_empty() {
            return Err(SplitError::InvalidSlot("a plan needs at least one slot".into()));
        }
        if slots
            .iter()
            .flat_map(|s| s.member_part.keys())
            .any(|&h| h >= universe.len())
        {
            return Err(SplitError::InvalidSlot("holder outside the universe".into()));
        }
        if slots
            .iter()
            .any(|s| s.parts.iter().map(BTreeSet::len).sum::<usize>() != prime_count)
        {
            return Err(SplitError::InvalidSlot("slot prime count differs from the plan".into()));
        }
        Ok(Self {
            universe,
            prime_count,
            slots,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn prime_count(&self) -> usize {
        self.prime_count
    }

    pub fn slots(&self) -> &[SlotAssignment] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Union of the groups each slot authenticates.
    pub fn coverage(&self) -> GroupFamily {
        self.slots
            .iter()
            .flat_map(SlotAssignment::authorized_groups)
            .collect()
    }

    /// Checks that the plan authenticates exactly `family`.
    pub fn check_exact(&self, family: &GroupFamily) -> Result<(), SplitError> {
        let covered = self.coverage();
        if covered == *family {
            return Ok(());
        }
        Err(SplitError::CoverageMismatch {
            missing: self.universe.label_family(&(family - &covered)),
            extra: self.universe.label_family(&(&covered - family)),
        })
    }
}

fn check_family(family: &GroupFamily, universe: &Universe, n: usize) -> Result<(), SplitError> {
    if family.is_empty() {
        return Err(SplitError::EmptyFamily);
    }
    for &g in family {
        if g.is_empty() || g.members().any(|h| h >= universe.len()) {
            return Err(SplitError::InvalidSlot("group outside the universe".into()));
        }
        if g.len() > n {
            return Err(SplitError::GroupLargerThanPrimeCount {
                group: universe.label(g),
                size: g.len(),
                prime_count: n,
            });
        }
    }
    Ok(())
}

/// Slot whose parts follow `classes` (already ordered) over balanced index runs.
fn slot_from_classes(classes: &[Vec<usize>], n: usize) -> SlotAssignment {
    let indices: Vec<usize> = (0..n).collect();
    let parts = balanced_contiguous(&indices, classes.len())
        .into_iter()
        .map(BTreeSet::from_iter)
        .collect();
    let member_part = classes
        .iter()
        .enumerate()
        .flat_map(|(part, class)| class.iter().map(move |&h| (h, part)))
        .collect();
    SlotAssignment { parts, member_part }
}

/// One slot per group, each member on its own part.
pub fn slots_baseline(
    family: &GroupFamily,
    universe: &Universe,
    n: usize,
) -> Result<SlotPlan, SplitError> {
    check_family(family, universe, n)?;
    let slots = family
        .iter()
        .map(|g| {
            let classes: Vec<Vec<usize>> = g.members().map(|h| vec![h]).collect();
            slot_from_classes(&classes, n)
        })
        .collect();
    let plan = SlotPlan::new(universe.clone(), n, slots)?;
    plan.check_exact(family)?;
    Ok(plan)
}

/// Grows the classes of a seed group: repeatedly adds an unused holder to a
/// class when every newly authorized group is still in `remaining`.
fn grow_classes(seed: Group, remaining: &GroupFamily, universe: &Universe) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = seed.members().map(|h| vec![h]).collect();
    loop {
        let used: Vec<usize> = classes.iter().flatten().copied().collect();
        let extension = (0..universe.len())
            .filter(|h| !used.contains(h))
            .flat_map(|h| (0..classes.len()).map(move |j| (h, j)))
            .find(|&(h, j)| {
                let mut trial = classes.clone();
                trial[j] = vec![h];
                transversals(&trial).iter().all(|g| remaining.contains(g))
            });
        match extension {
            Some((h, j)) => classes[j].push(h),
            None => break,
        }
    }
    for class in &mut classes {
        class.sort_unstable();
    }
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Greedy packing of several groups per slot. Each round picks the seed
/// whose grown slot covers the most still-uncovered groups; slots never
/// authorize a group outside the family, so coverage stays exact.
pub fn slots_packed(
    family: &GroupFamily,
    universe: &Universe,
    n: usize,
) -> Result<SlotPlan, SplitError> {
    check_family(family, universe, n)?;
    let mut remaining = family.clone();
    let mut slots = Vec::new();
    while let Some(&first) = remaining.iter().next() {
        let seeds: Vec<Group> = if remaining.len() <= EXHAUSTIVE_SEED_LIMIT {
            remaining.iter().copied().collect()
        } else {
            vec![first]
        };
        let (classes, covered) = seeds
            .into_iter()
            .map(|seed| {
                let classes = grow_classes(seed, &remaining, universe);
                let covered = transversals(&classes);
                (classes, covered)
            })
            .fold(None::<(Vec<Vec<usize>>, Vec<Group>)>, |best, cand| match best {
                Some(b) if b.1.len() >= cand.1.len() => Some(b),
                _ => Some(cand),
            })
            .expect("remaining is non-empty");
        for g in &covered {
            remaining.remove(g);
        }
        slots.push(slot_from_classes(&classes, n));
    }
    let plan = SlotPlan::new(universe.clone(), n, slots)?;
    plan.check_exact(family)?;
    Ok(plan)
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::policy::{authorized_family, parse};
    use proptest::prelude::*;

    fn abcde() -> Universe {
        Universe::from_list("A,B,C,D,E").unwrap()
    }

    fn fam(u: &Universe, labels: &[&str]) -> GroupFamily {
        labels
            .iter()
            .map(|l| {
                let names: Vec<String> = l.chars().map(String::from).collect();
                u.group(&names).unwrap()
            })
            .collect()
    }

    fn parts(runs: &[std::ops::Range<usize>]) -> Vec<BTreeSet<usize>> {
        runs.iter().map(|r| r.clone().collect()).collect()
    }

    #[test]
    fn two_class_slot() {
        let u = abcde();
        let slot = SlotAssignment::new(
            parts(&[0..6, 6..12]),
            BTreeMap::from([(0, 0), (1, 0), (2, 1), (3, 1), (4, 1)]),
            12,
        )
        .unwrap();
        assert_eq!(
            slot.authorized_groups(),
            fam(&u, &["AC", "AD", "AE", "BC", "BD", "BE"])
        );
    }

    #[test]
    fn three_class_slot_with_absent_holder() {
        let u = abcde();
        let slot = SlotAssignment::new(
            parts(&[0..4, 4..8, 8..12]),
            BTreeMap::from([(0, 0), (2, 1), (3, 2), (4, 2)]),
            12,
        )
        .unwrap();
        assert_eq!(slot.authorized_groups(), fam(&u, &["ACD", "ACE"]));
    }

    #[test]
    fn single_part_slot() {
        let u = abcde();
        let slot = SlotAssignment::new(parts(&[0..12]), BTreeMap::from([(0, 0)]), 12).unwrap();
        assert_eq!(slot.authorized_groups(), fam(&u, &["A"]));
    }

    #[test]
    fn slot_validation() {
        let m = BTreeMap::from([(0, 0), (1, 1)]);
        assert!(SlotAssignment::new(parts(&[0..6, 5..12]), m.clone(), 12).is_err());
        assert!(SlotAssignment::new(parts(&[0..6, 6..11]), m.clone(), 12).is_err());
        assert!(SlotAssignment::new(parts(&[0..6, 6..12, 12..12]), m.clone(), 12).is_err());
        assert!(SlotAssignment::new(parts(&[0..6, 6..12]), BTreeMap::from([(0, 0)]), 12).is_err());
        assert!(SlotAssignment::new(parts(&[0..6, 6..12]), BTreeMap::from([(0, 0), (1, 2)]), 12).is_err());
        assert!(SlotAssignment::new(parts(&[0..6, 6..12]), m, 12).is_ok());
    }

    #[test]
    fn baseline_single_pair() {
        let u = abcde();
        let plan = slots_baseline(&fam(&u, &["AB"]), &u, 12).unwrap();
        assert_eq!(plan.len(), 1);
        let slot = &plan.slots()[0];
        assert_eq!(slot.parts(), parts(&[0..6, 6..12]).as_slice());
        assert_eq!(slot.part_of(0), Some(0));
        assert_eq!(slot.part_of(1), Some(1));
    }

    #[test]
    fn baseline_singleton() {
        let u = abcde();
        let plan = slots_baseline(&fam(&u, &["A"]), &u, 12).unwrap();
        assert_eq!(plan.slots()[0].parts(), parts(&[0..12]).as_slice());
    }

    #[test]
    fn group_too_large() {
        let u = abcde();
        let err = slots_baseline(&fam(&u, &["ABCDE"]), &u, 4).unwrap_err();
        assert!(matches!(err, SplitError::GroupLargerThanPrimeCount { size: 5, .. }));
        assert_eq!(slots_packed(&GroupFamily::new(), &u, 4), Err(SplitError::EmptyFamily));
    }

    #[test]
    fn airplane_plans_are_exact() {
        let u = abcde();
        let expr = parse("(A and B) or ((A or B) and (C or D or E))", &u).unwrap();
        let family = authorized_family(&expr, &u, Some(3)).unwrap();
        let baseline = slots_baseline(&family, &u, 12).unwrap();
        assert_eq!(baseline.len(), 16);
        assert_eq!(baseline.coverage(), family);
        let packed = slots_packed(&family, &u, 12).unwrap();
        assert_eq!(packed.coverage(), family);
        assert!(packed.len() <= 7, "packed into {} slots", packed.len());
    }

    #[test]
    fn one_slot_for_a_product_family() {
        let u = abcde();
        let packed = slots_packed(&fam(&u, &["AC", "AD", "AE", "BC", "BD", "BE"]), &u, 12).unwrap();
        assert_eq!(packed.len(), 1);
        assert_eq!(packed.slots()[0].classes(), vec![vec![0, 1], vec![2, 3, 4]]);
        let u2 = Universe::from_list("A1,A2").unwrap();
        let pair = GroupFamily::from([u2.group(&["A1", "A2"]).unwrap()]);
        assert_eq!(slots_packed(&pair, &u2, 8).unwrap().len(), 1);
    }

    #[test]
    fn mismatch_is_reported() {
        let u = abcde();
        let plan = slots_baseline(&fam(&u, &["AB"]), &u, 12).unwrap();
        assert_eq!(
            plan.check_exact(&fam(&u, &["AC"])),
            Err(SplitError::CoverageMismatch {
                missing: vec!["AC".into()],
                extra: vec!["AB".into()]
            })
        );
    }

    proptest! {
        #[test]
        fn plans_cover_random_families_exactly(masks in prop::collection::btree_set(1u32..32, 1..20)) {
            let u = abcde();
            let family: GroupFamily = masks.into_iter().map(Group).collect();
            let baseline = slots_baseline(&family, &u, 12).unwrap();
            let packed = slots_packed(&family, &u, 12).unwrap();
            prop_assert_eq!(baseline.coverage(), family.clone());
            prop_assert_eq!(packed.coverage(), family.clone());
            prop_assert!(packed.len() <= baseline.len());
            for slot in packed.slots() {
                let flat: Vec<usize> = slot.parts().iter().flatten().copied().collect();
                prop_assert_eq!(flat, (0..12).collect::<Vec<_>>());
            }
        }
    }
}
