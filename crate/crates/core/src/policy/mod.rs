//! Boolean policies over named key holders and the groups they authorize.

mod parse;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

pub use parse::{parse, ParseError, ParseErrorKind};

/// Upper bound on holders, since families are found by enumerating `2^|U|` subsets.
pub const MAX_HOLDERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("universe must contain at least one holder")]
    EmptyUniverse,
    #[error("universe has {0} holders; at most {MAX_HOLDERS} are supported")]
    UniverseTooLarge(usize),
    #[error("holder {0:?} appears more than once")]
    DuplicateHolder(String),
    #[error("{0:?} is not a valid holder name")]
    InvalidHolderName(String),
    #[error("unknown holder {0:?}")]
    UnknownHolder(String),
}

/// Ordered, duplicate-free list of holder names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Universe {
    names: Vec<String>,
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(name, "and" | "or" | "not")
}

impl Universe {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, PolicyError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(PolicyError::EmptyUniverse);
        }
        if names.len() > MAX_HOLDERS {
            return Err(PolicyError::UniverseTooLarge(names.len()));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !is_identifier(name) {
                return Err(PolicyError::InvalidHolderName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(PolicyError::DuplicateHolder(name.clone()));
            }
        }
        Ok(Self { names })
    }

    /// Parses a comma-separated holder list such as `A,B,C`.
    pub fn from_list(list: &str) -> Result<Self, PolicyError> {
        Self::new(list.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn group<S: AsRef<str>>(&self, members: &[S]) -> Result<Group, PolicyError> {
        members.iter().try_fold(Group::EMPTY, |g, name| {
            self.index_of(name.as_ref())
                .map(|i| g.with(i))
                .ok_or_else(|| PolicyError::UnknownHolder(name.as_ref().to_owned()))
        })
    }

    /// Every non-empty subset of the universe.
    pub fn all_groups(&self) -> impl Iterator<Item = Group> {
        (1u32..(1u32 << self.names.len())).map(Group)
    }

    /// Compact label: `AC` when every name is one character, `A1+A3` otherwise.
    pub fn label(&self, group: Group) -> String {
        let sep = if self.names.iter().all(|n| n.chars().count() == 1) {
            ""
        } else {
            "+"
        };
        group
            .members()
            .map(|i| self.names[i].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn label_family(&self, family: &GroupFamily) -> Vec<String> {
        family.iter().map(|&g| self.label(g)).collect()
    }
}

/// A set of holders, stored as a bitmask over universe positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Group(pub u32);

impl Group {
    pub const EMPTY: Group = Group(0);

    pub fn with(self, member: usize) -> Group {
        Group(self.0 | (1 << member))
    }

    pub fn contains(self, member: usize) -> bool {
        self.0 & (1 << member) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Group) -> bool {
        self.0 & other.0 == self.0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }
}

// Size first, then members lexicographically: AB < AC < BC < ABC.
impl Ord for Group {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.members().cmp(other.members()))
    }
}

impl PartialOrd for Group {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub type GroupFamily = BTreeSet<Group>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicyExpr {
    Var(String),
    And(Vec<PolicyExpr>),
    Or(Vec<PolicyExpr>),
    Not(Box<PolicyExpr>),
}

impl PolicyExpr {
    pub fn var(name: impl Into<String>) -> Self {
        PolicyExpr::Var(name.into())
    }

    /// Conjunction, flattening nested conjunctions. A single operand is returned as is.
    ///
    /// # Panics
    /// If `operands` is empty.
    pub fn and(operands: impl IntoIterator<Item = PolicyExpr>) -> Self {
        Self::nary(operands, true)
    }

    /// Disjunction, flattening nested disjunctions. A single operand is returned as is.
    ///
    /// # Panics
    /// If `operands` is empty.
    pub fn or(operands: impl IntoIterator<Item = PolicyExpr>) -> Self {
        Self::nary(operands, false)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(operand: PolicyExpr) -> Self {
        PolicyExpr::Not(Box::new(operand))
    }

    fn nary(operands: impl IntoIterator<Item = PolicyExpr>, conjunction: bool) -> Self {
        let mut flat = Vec::new();
        for op in operands {
            match (op, conjunction) {
                (PolicyExpr::And(children), true) | (PolicyExpr::Or(children), false) => {
                    flat.extend(children)
                }
                (other, _) => flat.push(other),
            }
        }
        assert!(!flat.is_empty(), "n-ary policy node needs an operand");
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        if conjunction {
            PolicyExpr::And(flat)
        } else {
            PolicyExpr::Or(flat)
        }
    }

    pub fn evaluate(&self, present: &impl Fn(&str) -> bool) -> bool {
        match self {
            PolicyExpr::Var(name) => present(name),
            PolicyExpr::And(children) => children.iter().all(|c| c.evaluate(present)),
            PolicyExpr::Or(children) => children.iter().any(|c| c.evaluate(present)),
            PolicyExpr::Not(child) => !child.evaluate(present),
        }
    }

    /// Evaluates with exactly the members of `group` present.
    pub fn evaluate_group(&self, universe: &Universe, group: Group) -> bool {
        self.evaluate(&|name| universe.index_of(name).is_some_and(|i| group.contains(i)))
    }

    /// Syntactic monotonicity: true iff no `not` occurs.
    pub fn is_monotone(&self) -> bool {
        match self {
            PolicyExpr::Var(_) => true,
            PolicyExpr::And(children) | PolicyExpr::Or(children) => {
                children.iter().all(PolicyExpr::is_monotone)
            }
            PolicyExpr::Not(_) => false,
        }
    }

    /// Holder names in order of first appearance.
    pub fn variables(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a PolicyExpr, out: &mut Vec<&'a str>) {
            match e {
                PolicyExpr::Var(name) => {
                    if !out.contains(&name.as_str()) {
                        out.push(name);
                    }
                }
                PolicyExpr::And(cs) | PolicyExpr::Or(cs) => cs.iter().for_each(|c| walk(c, out)),
                PolicyExpr::Not(c) => walk(c, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            PolicyExpr::Or(_) => 1,
            PolicyExpr::And(_) => 2,
            PolicyExpr::Not(_) => 3,
            PolicyExpr::Var(_) => 4,
        }
    }

    fn compile(&self, universe: &Universe) -> Result<Compiled, PolicyError> {
        Ok(match self {
            PolicyExpr::Var(name) => Compiled::Var(
                universe
                    .index_of(name)
                    .ok_or_else(|| PolicyError::UnknownHolder(name.clone()))?,
            ),
            PolicyExpr::And(cs) => Compiled::And(
                cs.iter().map(|c| c.compile(universe)).collect::<Result<_, _>>()?,
            ),
            PolicyExpr::Or(cs) => Compiled::Or(
                cs.iter().map(|c| c.compile(universe)).collect::<Result<_, _>>()?,
            ),
            PolicyExpr::Not(c) => Compiled::Not(Box::new(c.compile(universe)?)),
        })
    }
}

/// Canonical text: `and`/`or`/`not` with only the parentheses precedence requires.
impl fmt::Display for PolicyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, c: &PolicyExpr, parens: bool| {
            if parens {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        };
        match self {
            PolicyExpr::Var(name) => f.write_str(name),
            PolicyExpr::And(cs) | PolicyExpr::Or(cs) => {
                let op = if matches!(self, PolicyExpr::And(_)) { " and " } else { " or " };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    child(f, c, c.precedence() <= self.precedence())?;
                }
                Ok(())
            }
            PolicyExpr::Not(c) => {
                f.write_str("not ")?;
                child(f, c, c.precedence() < self.precedence())
            }
        }
    }
}

/// Policy with holder names resolved to universe positions.
enum Compiled {
    Var(usize),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Not(Box<Compiled>),
}

impl Compiled {
    fn eval(&self, group: Group) -> bool {
        match self {
            Compiled::Var(i) => group.contains(*i),
            Compiled::And(cs) => cs.iter().all(|c| c.eval(group)),
            Compiled::Or(cs) => cs.iter().any(|c| c.eval(group)),
            Compiled::Not(c) => !c.eval(group),
        }
    }
}

/// All non-empty groups satisfying `expr`, optionally capped at `max_size` members.
pub fn authorized_family(
    expr: &PolicyExpr,
    universe: &Universe,
    max_size: Option<usize>,
) -> Result<GroupFamily, PolicyError> {
    let compiled = expr.compile(universe)?;
    Ok(universe
        .all_groups()
        .filter(|g| max_size.is_none_or(|k| g.len() <= k))
        .filter(|&g| compiled.eval(g))
        .collect())
}

/// Members of `family` none of whose proper subsets are also members.
pub fn minimal_sets(family: &GroupFamily) -> GroupFamily {
    family
        .iter()
        .copied()
        .filter(|&g| !family.iter().any(|&h| h != g && h.is_subset_of(g)))
        .collect()
}
