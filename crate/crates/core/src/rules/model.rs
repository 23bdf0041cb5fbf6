use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::RuleError;

/// Name of the builtin atom relating a variable to a class constant.
pub const SUBCLASS_OF: &str = "subClassOf";

/// Rule variable, matching `[a-z][a-zA-Z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Result<Self, RuleError> {
        let name = name.into();
        if is_variable(&name) {
            Ok(Self(name))
        } else {
            Err(RuleError::InvalidVariable(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_variable(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl TryFrom<String> for Var {
    type Error = RuleError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Var> for String {
    fn from(v: Var) -> Self {
        v.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A unary or binary predicate application over variables, or the
/// `subClassOf(x, Class)` builtin whose second argument is a class constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Unary { predicate: String, var: Var },
    Binary { predicate: String, subject: Var, object: Var },
    SubClassOf { var: Var, class: String },
}

impl Atom {
    pub fn unary(predicate: impl Into<String>, var: &str) -> Result<Self, RuleError> {
        Ok(Atom::Unary { predicate: predicate.into(), var: Var::new(var)? })
    }

    pub fn binary(predicate: impl Into<String>, subject: &str, object: &str) -> Result<Self, RuleError> {
        Ok(Atom::Binary { predicate: predicate.into(), subject: Var::new(subject)?, object: Var::new(object)? })
    }

    pub fn subclass_of(var: &str, class: impl Into<String>) -> Result<Self, RuleError> {
        Ok(Atom::SubClassOf { var: Var::new(var)?, class: class.into() })
    }

    pub fn predicate(&self) -> &str {
        match self {
            Atom::Unary { predicate, .. } | Atom::Binary { predicate, .. } => predicate,
            Atom::SubClassOf { .. } => SUBCLASS_OF,
        }
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self, Atom::SubClassOf { .. })
    }

    pub fn arity(&self) -> usize {
        match self {
            Atom::Unary { .. } => 1,
            _ => 2,
        }
    }

    pub fn variables(&self) -> Vec<&Var> {
        match self {
            Atom::Unary { var, .. } | Atom::SubClassOf { var, .. } => vec![var],
            Atom::Binary { subject, object, .. } => vec![subject, object],
        }
    }

    /// Renames variables through `f`.
    pub fn map_vars(&self, mut f: impl FnMut(&Var) -> Var) -> Atom {
        match self {
            Atom::Unary { predicate, var } => Atom::Unary { predicate: predicate.clone(), var: f(var) },
            Atom::Binary { predicate, subject, object } => {
                let subject = f(subject);
                Atom::Binary { predicate: predicate.clone(), subject, object: f(object) }
            }
            Atom::SubClassOf { var, class } => Atom::SubClassOf { var: f(var), class: class.clone() },
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Unary { predicate, var } => write!(f, "{predicate}({var})"),
            Atom::Binary { predicate, subject, object } => write!(f, "{predicate}({subject},{object})"),
            Atom::SubClassOf { var, class } => write!(f, "{SUBCLASS_OF}({var}, {class})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Bidirectional,
    LeftToRight,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::Bidirectional => "<->",
            Direction::LeftToRight => "->",
        }
    }
}

/// A complex correspondence: a conjunction over the source ontology on the
/// left, a conjunction over the target ontology on the right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentRule {
    id: String,
    direction: Direction,
    lhs: Vec<Atom>,
    rhs: Vec<Atom>,
}

impl AlignmentRule {
    pub fn new(id: impl Into<String>, direction: Direction, lhs: Vec<Atom>, rhs: Vec<Atom>) -> Result<Self, RuleError> {
        if lhs.is_empty() {
            return Err(RuleError::EmptySide { side: "left" });
        }
        if rhs.is_empty() {
            return Err(RuleError::EmptySide { side: "right" });
        }
        Ok(Self { id: id.into(), direction, lhs, rhs })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn lhs(&self) -> &[Atom] {
        &self.lhs
    }

    pub fn rhs(&self) -> &[Atom] {
        &self.rhs
    }

    /// Distinct target-side pieces: rhs predicate names, with the builtin
    /// contributing its class constant instead of `subClassOf`.
    pub fn target_pieces(&self) -> BTreeSet<String> {
        pieces(&self.rhs)
    }

    /// Distinct source-side predicate names.
    pub fn source_pieces(&self) -> BTreeSet<String> {
        pieces(&self.lhs)
    }

    /// Whether the target side uses the `subClassOf` builtin.
    pub fn uses_subclass_builtin(&self) -> bool {
        self.rhs.iter().any(Atom::is_builtin)
    }

    /// One message per side whose atoms do not form a single component
    /// under shared variables.
    pub fn connectivity_diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (side, atoms) in [("left", &self.lhs), ("right", &self.rhs)] {
            let components = component_count(atoms);
            if components > 1 {
                out.push(format!(
                    "rule {}: {side} side splits into {components} variable-disconnected parts",
                    self.id
                ));
            }
        }
        out
    }

    /// Equality up to a consistent renaming of variables (shared across
    /// both sides); atom order is ignored.
    pub fn isomorphic_to(&self, other: &AlignmentRule) -> bool {
        if self.direction != other.direction || self.lhs.len() != other.lhs.len() {
            return false;
        }
        let tag = |r: &'_ AlignmentRule| -> Vec<(u8, Atom)> {
            r.lhs.iter().map(|a| (0, a.clone())).chain(r.rhs.iter().map(|a| (1, a.clone()))).collect()
        };
        tagged_match(&tag(self), &tag(other))
    }
}

fn pieces(atoms: &[Atom]) -> BTreeSet<String> {
    atoms
        .iter()
        .map(|a| match a {
            Atom::SubClassOf { class, .. } => class.clone(),
            other => other.predicate().to_string(),
        })
        .collect()
}

pub(crate) fn component_count(atoms: &[Atom]) -> usize {
    let n = atoms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut owner: BTreeMap<&Var, usize> = BTreeMap::new();
    for (i, atom) in atoms.iter().enumerate() {
        for v in atom.variables() {
            match owner.get(v) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
                None => {
                    owner.insert(v, i);
                }
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Whether the conjunctions are equal as atom multisets under some
/// injective variable renaming.
pub fn conjunctions_isomorphic(a: &[Atom], b: &[Atom]) -> bool {
    let tag = |atoms: &[Atom]| -> Vec<(u8, Atom)> { atoms.iter().map(|a| (0, a.clone())).collect() };
    tagged_match(&tag(a), &tag(b))
}

fn tagged_match(a: &[(u8, Atom)], b: &[(u8, Atom)]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut taken = vec![false; b.len()];
    match_from(a, b, 0, &mut taken, &mut BTreeMap::new(), &mut BTreeSet::new())
}

fn same_shape(a: &Atom, b: &Atom) -> bool {
    match (a, b) {
        (Atom::SubClassOf { class: ca, .. }, Atom::SubClassOf { class: cb, .. }) => ca == cb,
        (Atom::Unary { predicate: pa, .. }, Atom::Unary { predicate: pb, .. })
        | (Atom::Binary { predicate: pa, .. }, Atom::Binary { predicate: pb, .. }) => pa == pb,
        _ => false,
    }
}

fn match_from(
    a: &[(u8, Atom)],
    b: &[(u8, Atom)],
    i: usize,
    taken: &mut [bool],
    mapping: &mut BTreeMap<Var, Var>,
    used: &mut BTreeSet<Var>,
) -> bool {
    if i == a.len() {
        return true;
    }
    let (side, atom) = &a[i];
    for j in 0..b.len() {
        if taken[j] || b[j].0 != *side || !same_shape(atom, &b[j].1) {
            continue;
        }
        let saved_map = mapping.clone();
        let saved_used = used.clone();
        let ok = atom.variables().into_iter().zip(b[j].1.variables()).all(|(va, vb)| match mapping.get(va) {
            Some(m) => m == vb,
            None if used.contains(vb) => false,
            None => {
                mapping.insert(va.clone(), vb.clone());
                used.insert(vb.clone());
                true
            }
        });
        if ok {
            taken[j] = true;
            if match_from(a, b, i + 1, taken, mapping, used) {
                return true;
            }
            taken[j] = false;
        }
        *mapping = saved_map;
        *used = saved_used;
    }
    false
}
