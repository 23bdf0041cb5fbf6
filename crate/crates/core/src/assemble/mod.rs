//! Composing detected target predicates into a connected rule body.
//!
//! Each variable collects type constraints: the domain of a property it is
//! the subject of, the range of one it is the object of, and the classes
//! asserted on it. A constraint is a set of alternatives (a union domain
//! gives several). The constraints of a variable are consistent when one
//! class of the inventory is compatible with at least one alternative of
//! every constraint, where two classes are compatible if they are equal or
//! one is a (transitive) subclass of the other.
//!
//! Construction: the root variable `x` is typed by the detected class that
//! is the domain of the most detected properties. Other starts (each other
//! class, then each property on an untyped root) are tried only if that one
//! leaves something unplaced, and the first start placing the most wins.
//! From a start, until nothing changes, properties attach to the first
//! variable that stays consistent as their subject (or, failing that, as
//! their object) with a fresh variable on the other end, and classes attach
//! as unary atoms to the first variable that stays consistent. If the best
//! greedy layout places fewer predicates than could possibly be linked
//! together, a bounded backtracking search over the same choices replaces it
//! when it places strictly more. Whatever
//! is left is unplaced.

use std::collections::{BTreeMap, BTreeSet};

use crate::rdf::{EntityInventory, EntityRecord, Iri};
use crate::rules::{AlignmentRule, Atom, Direction, RuleError, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssemblyResult {
    pub body: Vec<Atom>,
    pub unplaced: BTreeSet<String>,
    pub root: Option<Var>,
}

impl AssemblyResult {
    pub fn placed(&self) -> BTreeSet<String> {
        self.body.iter().map(|a| a.predicate().to_string()).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.unplaced.is_empty() && !self.body.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssembleError {
    #[error("nothing to assemble")]
    Empty,
    #[error("not in the target inventory: {}", .0.join(", "))]
    Unresolved(Vec<String>),
}

/// Alternatives a variable's type must be compatible with. Empty means
/// unconstrained.
type Constraint = BTreeSet<Iri>;

#[derive(Debug, Clone)]
enum Pred {
    Class(Iri),
    Property { domain: Constraint, range: Constraint },
}

/// Subclass closure and the classes a variable may take.
pub(crate) struct Types {
    ancestors: BTreeMap<Iri, BTreeSet<Iri>>,
    universe: Vec<Iri>,
}

impl Types {
    fn new(inventory: &EntityInventory, extra: impl IntoIterator<Item = Iri>) -> Self {
        let parents: BTreeMap<&Iri, &BTreeSet<Iri>> =
            inventory.entities().iter().filter(|r| r.is_class()).map(|r| (&r.iri, &r.super_classes)).collect();
        let mut universe: BTreeSet<Iri> = inventory.entities().iter().filter(|r| r.is_class()).map(|r| r.iri.clone()).collect();
        universe.extend(extra);
        for ps in parents.values() {
            universe.extend(ps.iter().cloned());
        }
        let mut ancestors = BTreeMap::new();
        for c in &universe {
            let mut seen = BTreeSet::new();
            let mut stack = vec![c.clone()];
            while let Some(n) = stack.pop() {
                if seen.insert(n.clone()) {
                    if let Some(ps) = parents.get(&n) {
                        stack.extend(ps.iter().cloned());
                    }
                }
            }
            ancestors.insert(c.clone(), seen);
        }
        Types { ancestors, universe: universe.into_iter().collect() }
    }

    fn compatible(&self, a: &Iri, b: &Iri) -> bool {
        a == b
            || self.ancestors.get(a).is_some_and(|s| s.contains(b))
            || self.ancestors.get(b).is_some_and(|s| s.contains(a))
    }

    fn consistent<'c>(&self, constraints: impl IntoIterator<Item = &'c Constraint> + Clone) -> bool {
        let active: Vec<&Constraint> = constraints.into_iter().filter(|c| !c.is_empty()).collect();
        active.is_empty()
            || self.universe.iter().any(|t| active.iter().all(|c| c.iter().any(|m| self.compatible(t, m))))
    }
}

fn resolve<'a>(detected: &BTreeSet<String>, inventory: &'a EntityInventory) -> Result<Vec<(String, Pred)>, AssembleError> {
    if detected.is_empty() {
        return Err(AssembleError::Empty);
    }
    let mut missing = Vec::new();
    let mut out = Vec::new();
    for name in detected {
        let Some(r) = inventory.entities().iter().find(|r| r.local_name() == name) else {
            missing.push(name.clone());
            continue;
        };
        out.push((name.clone(), pred_of(r, inventory)));
    }
    if !missing.is_empty() {
        return Err(AssembleError::Unresolved(missing));
    }
    Ok(out)
}

fn pred_of(r: &EntityRecord, inventory: &EntityInventory) -> Pred {
    if !r.is_property() {
        return Pred::Class(r.iri.clone());
    }
    let mut domain = r.domains.clone();
    let mut range = r.ranges.clone();
    // An owl:inverseOf partner fills in what the property leaves open.
    let partner = r.inverse_of.as_ref().and_then(|i| inventory.get(i)).or_else(|| {
        inventory.entities().iter().find(|o| o.inverse_of.as_ref() == Some(&r.iri))
    });
    if let Some(q) = partner {
        if domain.is_empty() {
            domain = q.ranges.clone();
        }
        if range.is_empty() {
            range = q.domains.clone();
        }
    }
    Pred::Property { domain, range }
}

fn var_name(i: usize) -> String {
    const NAMES: [&str; 8] = ["x", "y", "z", "w", "v", "u", "t", "s"];
    NAMES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("x{}", i - NAMES.len() + 1))
}

fn types_for(inventory: &EntityInventory, preds: &[(String, Pred)]) -> Types {
    let mut extra = Vec::new();
    for (_, p) in preds {
        match p {
            Pred::Class(c) => extra.push(c.clone()),
            Pred::Property { domain, range } => extra.extend(domain.iter().chain(range).cloned()),
        }
    }
    Types::new(inventory, extra)
}

pub fn assemble(detected: &BTreeSet<String>, inventory: &EntityInventory) -> Result<AssemblyResult, AssembleError> {
    let preds = resolve(detected, inventory)?;
    let types = types_for(inventory, &preds);

    let domain_count = |i: usize| {
        let Pred::Class(c) = &preds[i].1 else { unreachable!() };
        preds.iter().filter(|(_, p)| matches!(p, Pred::Property { domain, .. } if domain.contains(c))).count()
    };
    let mut starts: Vec<usize> = (0..preds.len()).filter(|&i| matches!(preds[i].1, Pred::Class(_))).collect();
    starts.sort_by(|&a, &b| domain_count(b).cmp(&domain_count(a)).then_with(|| preds[a].0.cmp(&preds[b].0)));
    starts.extend((0..preds.len()).filter(|&i| matches!(preds[i].1, Pred::Property { .. })));

    // The preferred root wins unless another start places strictly more.
    let mut best: Option<Layout> = None;
    for first in starts {
        let candidate = grow(&preds, &types, first);
        if best.as_ref().is_none_or(|b| candidate.placed.len() > b.placed.len()) {
            best = Some(candidate);
        }
        if best.as_ref().is_some_and(|b| b.placed.len() == preds.len()) {
            break;
        }
    }
    let mut best = best.expect("at least one start");
    let bound = placement_bound(&preds, &types);
    if best.placed.len() < bound {
        let mut search = Search { preds: &preds, types: &types, budget: SEARCH_BUDGET, bound, best: best.clone() };
        search.run(&mut Layout::new());
        best = search.best;
    }
    Ok(best.finish(&preds))
}

/// Size of the largest group of predicates linked by pairs that can share
/// a variable. A connected body draws all its atoms from one such group.
fn placement_bound(preds: &[(String, Pred)], types: &Types) -> usize {
    let ends = |p: &Pred| -> Vec<Constraint> {
        match p {
            Pred::Class(c) => vec![[c.clone()].into()],
            Pred::Property { domain, range } => vec![domain.clone(), range.clone()],
        }
    };
    let ends: Vec<Vec<Constraint>> = preds.iter().map(|(_, p)| ends(p)).collect();
    let linked = |a: usize, b: usize| ends[a].iter().any(|x| ends[b].iter().any(|y| types.consistent([x, y])));
    let mut group: Vec<usize> = (0..preds.len()).collect();
    for a in 0..preds.len() {
        for b in a + 1..preds.len() {
            if linked(a, b) {
                let (from, to) = (group[b], group[a]);
                group.iter_mut().filter(|g| **g == from).for_each(|g| *g = to);
            }
        }
    }
    (0..preds.len()).map(|g| group.iter().filter(|&&x| x == g).count()).max().unwrap_or(0)
}

/// Node limit for the backtracking fallback; small inputs are searched
/// exhaustively well within it.
const SEARCH_BUDGET: usize = 20_000;

#[derive(Debug, Clone)]
enum Slot {
    Unary { pred: usize, var: usize },
    Binary { pred: usize, subject: usize, object: usize, anchor: usize },
}

/// Variables with their constraints and the atoms placed so far. Every
/// binary atom introduces a fresh variable, so the layout is a tree.
#[derive(Debug, Clone)]
struct Layout {
    vars: Vec<Vec<Constraint>>,
    slots: Vec<Slot>,
    placed: BTreeSet<usize>,
}

impl Layout {
    fn new() -> Self {
        Layout { vars: vec![Vec::new()], slots: Vec::new(), placed: BTreeSet::new() }
    }

    /// Ways of placing `i`: a class onto a variable, or a property anchored
    /// at a variable as subject (preferred) or object. Forward options come
    /// before reverse ones.
    fn options(&self, preds: &[(String, Pred)], types: &Types, i: usize) -> Vec<(usize, bool)> {
        match &preds[i].1 {
            Pred::Class(c) => {
                let cons: Constraint = [c.clone()].into();
                (0..self.vars.len()).filter(|&v| types.consistent(self.vars[v].iter().chain([&cons]))).map(|v| (v, true)).collect()
            }
            Pred::Property { domain, range } => {
                let fits = |c: &Constraint| -> Vec<usize> {
                    (0..self.vars.len()).filter(|&v| types.consistent(self.vars[v].iter().chain([c]))).collect()
                };
                let forward = fits(domain).into_iter().map(|v| (v, true));
                forward.chain(fits(range).into_iter().map(|v| (v, false))).collect()
            }
        }
    }

    fn place(&mut self, preds: &[(String, Pred)], i: usize, anchor: usize, forward: bool) {
        match &preds[i].1 {
            Pred::Class(c) => {
                self.vars[anchor].push([c.clone()].into());
                self.slots.push(Slot::Unary { pred: i, var: anchor });
            }
            Pred::Property { domain, range } => {
                let fresh = self.vars.len();
                let (own, other) = if forward { (domain, range) } else { (range, domain) };
                self.vars[anchor].push(own.clone());
                self.vars.push(vec![other.clone()]);
                let (subject, object) = if forward { (anchor, fresh) } else { (fresh, anchor) };
                self.slots.push(Slot::Binary { pred: i, subject, object, anchor });
            }
        }
        self.placed.insert(i);
    }

    fn unplace(&mut self) {
        let slot = self.slots.pop().expect("a placed slot");
        match slot {
            Slot::Unary { pred, var } => {
                self.vars[var].pop();
                self.placed.remove(&pred);
            }
            Slot::Binary { pred, anchor, .. } => {
                self.vars.pop();
                self.vars[anchor].pop();
                self.placed.remove(&pred);
            }
        }
    }

    fn finish(mut self, preds: &[(String, Pred)]) -> AssemblyResult {
        let mut body = Vec::new();
        for v in 0..self.vars.len() {
            for slot in &self.slots {
                if let Slot::Unary { pred, var } = slot {
                    if *var == v {
                        body.push(Atom::unary(&preds[*pred].0, &var_name(v)).expect("valid variable"));
                    }
                }
            }
            for slot in &self.slots {
                if let Slot::Binary { pred, subject, object, anchor } = slot {
                    if *anchor == v {
                        body.push(Atom::binary(&preds[*pred].0, &var_name(*subject), &var_name(*object)).expect("valid variables"));
                    }
                }
            }
        }
        self.slots.clear();
        let unplaced = (0..preds.len()).filter(|i| !self.placed.contains(i)).map(|i| preds[i].0.clone()).collect();
        let root = (!body.is_empty()).then(|| Var::new(var_name(0)).expect("valid variable"));
        AssemblyResult { body, unplaced, root }
    }
}

/// Greedy growth from one seed: a class typing `x`, or a property whose
/// subject is an untyped `x`. Properties go to their first option, then
/// classes, until nothing changes.
fn grow(preds: &[(String, Pred)], types: &Types, first: usize) -> Layout {
    let mut layout = Layout::new();
    layout.place(preds, first, 0, true);
    loop {
        let mut changed = false;
        for pass_classes in [false, true] {
            for i in 0..preds.len() {
                if layout.placed.contains(&i) || matches!(preds[i].1, Pred::Class(_)) != pass_classes {
                    continue;
                }
                if let Some(&(anchor, forward)) = layout.options(preds, types, i).first() {
                    layout.place(preds, i, anchor, forward);
                    changed = true;
                }
            }
        }
        if !changed {
            return layout;
        }
    }
}

struct Search<'a> {
    preds: &'a [(String, Pred)],
    types: &'a Types,
    budget: usize,
    bound: usize,
    best: Layout,
}

impl Search<'_> {
    fn run(&mut self, layout: &mut Layout) {
        if layout.placed.len() > self.best.placed.len() {
            self.best = layout.clone();
        }
        if self.best.placed.len() == self.bound {
            return;
        }
        for i in 0..self.preds.len() {
            if layout.placed.contains(&i) {
                continue;
            }
            for (anchor, forward) in layout.options(self.preds, self.types, i) {
                if self.budget == 0 {
                    return;
                }
                self.budget -= 1;
                layout.place(self.preds, i, anchor, forward);
                self.run(layout);
                layout.unplace();
                if self.best.placed.len() == self.bound {
                    return;
                }
            }
        }
    }
}

/// An assembled target side packaged with a known source side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedRule {
    pub id: String,
    pub direction: Direction,
    pub lhs: Vec<Atom>,
    pub rhs: Vec<Atom>,
    /// Some detected predicate was left out, or the body is empty.
    pub incomplete: bool,
    pub unplaced: BTreeSet<String>,
}

impl ComposedRule {
    pub fn rule(&self) -> Result<AlignmentRule, RuleError> {
        AlignmentRule::new(self.id.clone(), self.direction, self.lhs.clone(), self.rhs.clone())
    }

    /// One line of an assembled rule file.
    pub fn to_line(&self) -> String {
        let side = |atoms: &[Atom]| atoms.iter().map(ToString::to_string).collect::<Vec<_>>().join(" & ");
        let rhs = if self.rhs.is_empty() { "(empty)".to_string() } else { side(&self.rhs) };
        let mut line = format!("{}: {} {} {}", self.id, side(&self.lhs), self.direction.arrow(), rhs);
        if self.incomplete {
            line = if self.rhs.is_empty() { format!("# {line}") } else { line };
            line.push_str(" # incomplete");
            if !self.unplaced.is_empty() {
                line.push_str(&format!("; unplaced: {}", self.unplaced.iter().cloned().collect::<Vec<_>>().join(", ")));
            }
        }
        line
    }
}

/// Bidirectional rule from `lhs` and the assembled body. Body variables are
/// renamed by first appearance to `x, y, z, w, ...`; the two sides share a
/// variable exactly when the names coincide.
pub fn compose_rule(id: &str, lhs: &[Atom], assembly: &AssemblyResult) -> ComposedRule {
    let mut names: BTreeMap<Var, Var> = BTreeMap::new();
    for atom in &assembly.body {
        for v in atom.variables() {
            let n = names.len();
            names.entry(v.clone()).or_insert_with(|| Var::new(var_name(n)).expect("valid variable"));
        }
    }
    let rhs: Vec<Atom> = assembly.body.iter().map(|a| a.map_vars(|v| names[v].clone())).collect();
    ComposedRule {
        id: id.to_string(),
        direction: Direction::Bidirectional,
        lhs: lhs.to_vec(),
        incomplete: !assembly.unplaced.is_empty() || rhs.is_empty(),
        rhs,
        unplaced: assembly.unplaced.clone(),
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Exhaustive search for the largest connected, consistent placement.

    use super::*;

    pub fn max_placed(detected: &BTreeSet<String>, inventory: &EntityInventory, max_vars: usize) -> usize {
        let preds = resolve(detected, inventory).expect("resolvable fixture");
        let types = types_for(inventory, &preds);
        let mut best = 0;
        let mut placement: Vec<Option<(usize, Option<usize>)>> = Vec::new();
        search(&preds, &types, max_vars, &mut placement, 0, &mut best);
        best
    }

    fn search(
        preds: &[(String, Pred)],
        types: &Types,
        max_vars: usize,
        placement: &mut Vec<Option<(usize, Option<usize>)>>,
        used_vars: usize,
        best: &mut usize,
    ) {
        if placement.len() == preds.len() {
            if connected(placement, used_vars) {
                *best = (*best).max(placement.iter().flatten().count());
            }
            return;
        }
        let remaining = preds.len() - placement.len();
        if placement.iter().flatten().count() + remaining <= *best {
            return;
        }
        placement.push(None);
        search(preds, types, max_vars, placement, used_vars, best);
        placement.pop();
        let limit = (used_vars + 1).min(max_vars);
        match &preds[placement.len()].1 {
            Pred::Class(_) => {
                for v in 0..limit {
                    placement.push(Some((v, None)));
                    if consistent(preds, types, placement, max_vars) {
                        search(preds, types, max_vars, placement, used_vars.max(v + 1), best);
                    }
                    placement.pop();
                }
            }
            Pred::Property { .. } => {
                for s in 0..limit {
                    let after_s = used_vars.max(s + 1);
                    for o in 0..(after_s + 1).min(max_vars) {
                        if o == s {
                            continue;
                        }
                        placement.push(Some((s, Some(o))));
                        if consistent(preds, types, placement, max_vars) {
                            search(preds, types, max_vars, placement, after_s.max(o + 1), best);
                        }
                        placement.pop();
                    }
                }
            }
        }
    }

    fn consistent(preds: &[(String, Pred)], types: &Types, placement: &[Option<(usize, Option<usize>)>], max_vars: usize) -> bool {
        let mut cons: Vec<Vec<Constraint>> = vec![Vec::new(); max_vars];
        for (i, p) in placement.iter().enumerate() {
            let Some((s, o)) = p else { continue };
            match (&preds[i].1, o) {
                (Pred::Class(c), None) => cons[*s].push([c.clone()].into()),
                (Pred::Property { domain, range }, Some(o)) => {
                    cons[*s].push(domain.clone());
                    cons[*o].push(range.clone());
                }
                _ => unreachable!(),
            }
        }
        cons.iter().all(|c| types.consistent(c.iter()))
    }

    fn connected(placement: &[Option<(usize, Option<usize>)>], used_vars: usize) -> bool {
        let mut used = vec![false; used_vars];
        let mut parent: Vec<usize> = (0..used_vars).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for (s, o) in placement.iter().flatten() {
            used[*s] = true;
            if let Some(o) = o {
                used[*o] = true;
                let (a, b) = (find(&mut parent, *s), find(&mut parent, *o));
                parent[a] = b;
            }
        }
        let roots: BTreeSet<usize> = (0..used_vars).filter(|&v| used[v]).map(|v| find(&mut parent, v)).collect();
        roots.len() <= 1
    }
}
