//! Graph isomorphism up to blank-node renaming.
//!
//! Colour refinement narrows candidate pairs, then a backtracking search
//! looks for a bijection. Intended for ontology-sized graphs with a modest
//! number of blank nodes.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use super::graph::OntologyGraph;
use super::term::{BlankNode, Term, Triple};

pub fn isomorphic(a: &OntologyGraph, b: &OntologyGraph) -> bool {
    triples_isomorphic(a.triples(), b.triples())
}

pub fn triples_isomorphic(a: &BTreeSet<Triple>, b: &BTreeSet<Triple>) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let ground = |t: &&Triple| !t.subject.is_blank() && !t.object.is_blank();
    let ga: BTreeSet<&Triple> = a.iter().filter(ground).collect();
    let gb: BTreeSet<&Triple> = b.iter().filter(ground).collect();
    if ga != gb {
        return false;
    }
    let ba: Vec<&Triple> = a.iter().filter(|t| !ground(t)).collect();
    let bb: Vec<&Triple> = b.iter().filter(|t| !ground(t)).collect();
    let na = blank_nodes(&ba);
    let nb = blank_nodes(&bb);
    if na.len() != nb.len() {
        return false;
    }
    let ca = colours(&ba, &na);
    let cb = colours(&bb, &nb);
    let mut hist_a: Vec<u64> = ca.values().copied().collect();
    let mut hist_b: Vec<u64> = cb.values().copied().collect();
    hist_a.sort_unstable();
    hist_b.sort_unstable();
    if hist_a != hist_b {
        return false;
    }
    let target: BTreeSet<&Triple> = bb.iter().copied().collect();
    let order: Vec<BlankNode> = na.iter().copied().collect();
    let mut mapping = HashMap::new();
    let mut used = BTreeSet::new();
    search(&order, 0, &ca, &cb, &ba, &target, &mut mapping, &mut used)
}

fn blank_nodes(triples: &[&Triple]) -> BTreeSet<BlankNode> {
    triples
        .iter()
        .flat_map(|t| [t.subject.as_blank(), t.object.as_blank()])
        .flatten()
        .collect()
}

fn hash_of<T: Hash>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

fn colours(triples: &[&Triple], nodes: &BTreeSet<BlankNode>) -> BTreeMap<BlankNode, u64> {
    let mut colour: BTreeMap<BlankNode, u64> = nodes.iter().map(|b| (*b, 0)).collect();
    let term_sig = |t: &Term, colour: &BTreeMap<BlankNode, u64>| match t {
        Term::Blank(b) => (true, colour[b], 0u64),
        other => (false, 0, hash_of(other)),
    };
    for _ in 0..nodes.len().min(8) + 1 {
        let mut next = BTreeMap::new();
        for node in nodes {
            let mut sig: Vec<(u8, u64, (bool, u64, u64))> = Vec::new();
            for t in triples {
                if t.subject == Term::Blank(*node) {
                    sig.push((0, hash_of(&t.predicate), term_sig(&t.object, &colour)));
                }
                if t.object == Term::Blank(*node) {
                    sig.push((1, hash_of(&t.predicate), term_sig(&t.subject, &colour)));
                }
            }
            sig.sort_unstable();
            next.insert(*node, hash_of(&(colour[node], sig)));
        }
        if next == colour {
            break;
        }
        colour = next;
    }
    colour
}

#[allow(clippy::too_many_arguments)]
fn search(
    order: &[BlankNode],
    index: usize,
    ca: &BTreeMap<BlankNode, u64>,
    cb: &BTreeMap<BlankNode, u64>,
    source: &[&Triple],
    target: &BTreeSet<&Triple>,
    mapping: &mut HashMap<BlankNode, BlankNode>,
    used: &mut BTreeSet<BlankNode>,
) -> bool {
    if index == order.len() {
        return source.iter().all(|t| target.contains(&map_triple(t, mapping)));
    }
    let node = order[index];
    let candidates: Vec<BlankNode> = cb
        .iter()
        .filter(|(b, c)| **c == ca[&node] && !used.contains(*b))
        .map(|(b, _)| *b)
        .collect();
    for candidate in candidates {
        mapping.insert(node, candidate);
        used.insert(candidate);
        let consistent = source.iter().all(|t| {
            let fully_mapped = [&t.subject, &t.object]
                .iter()
                .all(|term| term.as_blank().is_none_or(|b| mapping.contains_key(&b)));
            !fully_mapped || target.contains(&map_triple(t, mapping))
        });
        if consistent && search(order, index + 1, ca, cb, source, target, mapping, used) {
            return true;
        }
        mapping.remove(&node);
        used.remove(&candidate);
    }
    false
}

fn map_triple(t: &Triple, mapping: &HashMap<BlankNode, BlankNode>) -> Triple {
    let map = |term: &Term| match term {
        Term::Blank(b) => Term::Blank(mapping[b]),
        other => other.clone(),
    };
    Triple { subject: map(&t.subject), predicate: t.predicate.clone(), object: map(&t.object) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_turtle;

    #[test]
    fn renamed_blank_nodes_are_isomorphic() {
        let a = parse_turtle("@prefix : <http://x#> . _:a :p _:b . _:b :q :c .", "a").unwrap();
        let b = parse_turtle("@prefix : <http://x#> . _:z :q :c . _:y :p _:z .", "b").unwrap();
        assert!(isomorphic(&a, &b));
    }

    #[test]
    fn structurally_different_graphs_are_not() {
        let a = parse_turtle("@prefix : <http://x#> . _:a :p _:b . _:b :p _:a .", "a").unwrap();
        let b = parse_turtle("@prefix : <http://x#> . _:a :p _:a . _:b :p _:b .", "b").unwrap();
        assert!(!isomorphic(&a, &b));
        let c = parse_turtle("@prefix : <http://x#> . :s :p [ :q 1 ] .", "c").unwrap();
        let d = parse_turtle("@prefix : <http://x#> . :s :p [ :q 2 ] .", "d").unwrap();
        assert!(!isomorphic(&c, &d));
    }
}
