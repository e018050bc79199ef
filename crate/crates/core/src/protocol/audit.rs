//! Brute-force audit: run every non-empty subset of holders end to end.

use std::collections::BTreeMap;

use rand::Rng;

use super::{
    challenge_for_plaintexts, make_challenge, token_respond, verify_responses,
    Challenge, MergeRule, Mode, NullPolicy, ProtocolError, ResponseVector, TokenShare,
    VerifierState,
};
use crate::nscrypt::{KeyShare, NsPrivateKey};
use crate::numtheory::Natural;
use crate::policy::{Group, GroupFamily, Universe};
use crate::sharesplit::ShareSequence;

/// Issued token material for a whole universe. Holders without a token
/// (absorbed by a monotone split) are simulated as silent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuedShares<T> {
    universe: Universe,
    mode: Mode,
    slot_count: usize,
    tokens: BTreeMap<String, TokenShare<T>>,
}

impl<T: Natural> IssuedShares<T> {
    pub fn monotone(universe: Universe, shares: BTreeMap<String, KeyShare<T>>) -> Result<Self, ProtocolError> {
        let tokens = shares
            .into_iter()
            .map(|(h, s)| (h, TokenShare::Monotone(s)))
            .collect();
        Self::new(universe, Mode::Monotone, 1, tokens)
    }

    pub fn sequence(
        universe: Universe,
        sequences: BTreeMap<String, ShareSequence<T>>,
    ) -> Result<Self, ProtocolError> {
        let slot_count = sequences.values().map(|s| s.slots.len()).max().unwrap_or(0);
        let tokens = sequences
            .into_iter()
            .map(|(h, s)| (h, TokenShare::Sequence(s)))
            .collect();
        Self::new(universe, Mode::Sequence, slot_count, tokens)
    }

    /// Mixed or inconsistent material is rejected up front.
    pub fn from_tokens(universe: Universe, tokens: Vec<TokenShare<T>>) -> Result<Self, ProtocolError> {
        let mode = match tokens.first() {
            Some(TokenShare::Sequence(_)) => Mode::Sequence,
            _ => Mode::Monotone,
        };
        let slot_count = match tokens.first() {
            Some(TokenShare::Sequence(s)) => s.slots.len(),
            _ => 1,
        };
        let tokens = tokens.into_iter().map(|t| (t.holder().to_owned(), t)).collect();
        Self::new(universe, mode, slot_count, tokens)
    }

    fn new(
        universe: Universe,
        mode: Mode,
        slot_count: usize,
        tokens: BTreeMap<String, TokenShare<T>>,
    ) -> Result<Self, ProtocolError> {
        if slot_count == 0 {
            return Err(ProtocolError::InvalidChallenge("share material has no slots".into()));
        }
        for (holder, token) in &tokens {
            if universe.index_of(holder).is_none() || holder != token.holder() {
                return Err(ProtocolError::InvalidChallenge(format!(
                    "share for '{holder}' does not belong to the universe"
                )));
            }
            match token {
                TokenShare::Monotone(_) if mode == Mode::Monotone => {}
                TokenShare::Sequence(s) if mode == Mode::Sequence => {
                    if s.slots.len() != slot_count {
                        return Err(ProtocolError::SlotCountMismatch {
                            expected: slot_count,
                            found: s.slots.len(),
                        });
                    }
                }
                _ => return Err(ProtocolError::ModeMismatch),
            }
        }
        Ok(Self {
            universe,
            mode,
            slot_count,
            tokens,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    pub fn token(&self, holder: &str) -> Option<&TokenShare<T>> {
        self.tokens.get(holder)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditConfig {
    pub merge: MergeRule,
    pub null_policy: NullPolicy,
    pub per_index_random: bool,
}

impl AuditConfig {
    /// OR merge for monotone material, sum with null 1 otherwise.
    pub fn default_for(mode: Mode) -> Self {
        Self {
            merge: match mode {
                Mode::Monotone => MergeRule::Or,
                Mode::Sequence => MergeRule::Sum,
            },
            null_policy: NullPolicy::One,
            per_index_random: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome<T> {
    pub plaintexts: Vec<T>,
    pub accepted: GroupFamily,
    /// Least matching slot of every accepted group.
    pub matching_slots: BTreeMap<Group, usize>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport<T> {
    pub universe: Universe,
    pub expected: GroupFamily,
    pub trials: Vec<TrialOutcome<T>>,
}

impl<T> AuditReport<T> {
    pub fn all_agree(&self) -> bool {
        self.trials.iter().all(|t| t.agrees)
    }

    /// Number of trials in which each group was accepted.
    pub fn acceptance_counts(&self) -> BTreeMap<Group, usize> {
        let mut counts = BTreeMap::new();
        for g in self.universe.all_groups() {
            let n = self.trials.iter().filter(|t| t.accepted.contains(&g)).count();
            counts.insert(g, n);
        }
        counts
    }

    /// Accepted groups outside the expected family, with trial counts.
    pub fn false_accepts(&self) -> BTreeMap<Group, usize> {
        self.acceptance_counts()
            .into_iter()
            .filter(|(g, n)| *n > 0 && !self.expected.contains(g))
            .collect()
    }

    /// Expected groups rejected in at least one trial, with rejection counts.
    pub fn false_rejects(&self) -> BTreeMap<Group, usize> {
        let trials = self.trials.len();
        self.acceptance_counts()
            .into_iter()
            .filter(|(g, n)| *n < trials && self.expected.contains(g))
            .map(|(g, n)| (g, trials - n))
            .collect()
    }
}

fn run_trial<T: Natural, R: Rng + ?Sized>(
    shares: &IssuedShares<T>,
    expected: &GroupFamily,
    config: &AuditConfig,
    challenge: &Challenge<T>,
    state: &VerifierState<T>,
    rng: &mut R,
) -> Result<TrialOutcome<T>, ProtocolError> {
    let universe = &shares.universe;
    // Each token answers once per session; subsets reuse those answers.
    let responses: Vec<Option<ResponseVector<T>>> = universe
        .names()
        .iter()
        .map(|h| {
            shares
                .token(h)
                .map(|t| token_respond(t, challenge, config.null_policy, rng))
                .transpose()
        })
        .collect::<Result<_, _>>()?;
    let mut accepted = GroupFamily::new();
    let mut matching_slots = BTreeMap::new();
    for group in universe.all_groups() {
        let present: Vec<ResponseVector<T>> = group
            .members()
            .filter_map(|i| responses[i].clone())
            .collect();
        let verdict = verify_responses(state, &present, Some(config.merge))?;
        if let Some(slot) = verdict.matching_slot {
            accepted.insert(group);
            matching_slots.insert(group, slot);
        }
    }
    let agrees = accepted == *expected;
    Ok(TrialOutcome {
        plaintexts: state.plaintexts.clone(),
        accepted,
        matching_slots,
        agrees,
    })
}

/// Audits `trials` random challenges.
pub fn audit<T: Natural, R: Rng + ?Sized>(
    private: &NsPrivateKey<T>,
    shares: &IssuedShares<T>,
    expected: &GroupFamily,
    config: &AuditConfig,
    trials: usize,
    rng: &mut R,
) -> Result<AuditReport<T>, ProtocolError> {
    let public = private.public_key()?;
    let outcomes = (0..trials)
        .map(|_| {
            let (challenge, state) = make_challenge(
                &public,
                shares.mode,
                config.merge,
                shares.slot_count,
                config.per_index_random,
                rng,
            )?;
            run_trial(shares, expected, config, &challenge, &state, rng)
        })
        .collect::<Result<_, _>>()?;
    Ok(AuditReport {
        universe: shares.universe.clone(),
        expected: expected.clone(),
        trials: outcomes,
    })
}

/// Audits one trial per entry of `plaintexts` (a shared m, or one per slot).
/// The rng only feeds random null responses.
pub fn audit_with_plaintexts<T: Natural, R: Rng + ?Sized>(
    private: &NsPrivateKey<T>,
    shares: &IssuedShares<T>,
    expected: &GroupFamily,
    config: &AuditConfig,
    plaintexts: &[Vec<T>],
    rng: &mut R,
) -> Result<AuditReport<T>, ProtocolError> {
    let public = private.public_key()?;
    let outcomes = plaintexts
        .iter()
        .enumerate()
        .map(|(k, ms)| {
            let (challenge, state) = challenge_for_plaintexts(
                &public,
                shares.mode,
                config.merge,
                shares.slot_count,
                format!("audit-{k}"),
                ms.clone(),
            )?;
            run_trial(shares, expected, config, &challenge, &state, rng)
        })
        .collect::<Result<_, _>>()?;
    Ok(AuditReport {
        universe: shares.universe.clone(),
        expected: expected.clone(),
        trials: outcomes,
    })
}
