use std::collections::{BTreeMap, BTreeSet};

use super::term::{BlankNode, Iri, Term, Triple};
use super::vocab;

/// An immutable, deduplicated set of triples together with the prefix map
/// declared by the document it was parsed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyGraph {
    source_name: String,
    triples: BTreeSet<Triple>,
    prefixes: BTreeMap<String, String>,
    by_subject: BTreeMap<Term, Vec<(Iri, Term)>>,
}

impl OntologyGraph {
    pub fn from_parts(
        source_name: impl Into<String>,
        triples: impl IntoIterator<Item = Triple>,
        prefixes: BTreeMap<String, String>,
    ) -> Self {
        let triples: BTreeSet<Triple> = triples.into_iter().collect();
        let mut by_subject: BTreeMap<Term, Vec<(Iri, Term)>> = BTreeMap::new();
        for t in &triples {
            by_subject
                .entry(t.subject.clone())
                .or_default()
                .push((t.predicate.clone(), t.object.clone()));
        }
        Self { source_name: source_name.into(), triples, prefixes, by_subject }
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    /// Subjects in term order.
    pub fn subjects(&self) -> impl Iterator<Item = &Term> {
        self.by_subject.keys()
    }

    pub fn has_subject(&self, subject: &Term) -> bool {
        self.by_subject.contains_key(subject)
    }

    /// `(predicate, object)` pairs for `subject`, sorted by predicate then object.
    pub fn describe(&self, subject: &Term) -> &[(Iri, Term)] {
        self.by_subject.get(subject).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn objects<'a>(&'a self, subject: &Term, predicate: &'a str) -> impl Iterator<Item = &'a Term> {
        self.describe(subject)
            .iter()
            .filter(move |(p, _)| p.as_str() == predicate)
            .map(|(_, o)| o)
    }

    /// Members of the RDF collection starting at `head`, or `None` if the
    /// chain is malformed or cyclic.
    pub fn list_members(&self, head: &Term) -> Option<Vec<Term>> {
        let mut members = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cursor = head.clone();
        loop {
            if let Term::Iri(iri) = &cursor {
                if iri.as_str() == vocab::RDF_NIL {
                    return Some(members);
                }
            }
            if !seen.insert(cursor.clone()) {
                return None;
            }
            let mut first = self.objects(&cursor, vocab::RDF_FIRST);
            let item = first.next()?.clone();
            if first.next().is_some() {
                return None;
            }
            let mut rest = self.objects(&cursor, vocab::RDF_REST);
            let next = rest.next()?.clone();
            if rest.next().is_some() {
                return None;
            }
            members.push(item);
            cursor = next;
        }
    }

    /// Blank nodes reachable from `subject` through object positions.
    pub fn blank_closure(&self, subject: &Term) -> BTreeSet<BlankNode> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![subject.clone()];
        while let Some(s) = stack.pop() {
            for (_, o) in self.describe(&s) {
                if let Term::Blank(b) = o {
                    if seen.insert(*b) {
                        stack.push(o.clone());
                    }
                }
            }
        }
        seen
    }

    /// Triples whose subject is `subject` or a blank node in its closure.
    pub fn subject_closure(&self, subject: &Term) -> BTreeSet<Triple> {
        let mut out = BTreeSet::new();
        let mut subjects = vec![subject.clone()];
        subjects.extend(self.blank_closure(subject).into_iter().map(Term::Blank));
        for s in subjects {
            for (p, o) in self.describe(&s) {
                out.insert(Triple::new(s.clone(), p.clone(), o.clone()));
            }
        }
        out
    }

    /// Shortest `prefix:local` form of `iri`, if a declared prefix covers it
    /// with a local part that is safe to print unescaped.
    pub fn compact(&self, iri: &Iri) -> Option<String> {
        let s = iri.as_str();
        self.prefixes
            .iter()
            .filter(|(_, ns)| s.starts_with(ns.as_str()))
            .filter(|(_, ns)| is_plain_local(&s[ns.len()..]))
            .max_by(|(pa, na), (pb, nb)| na.len().cmp(&nb.len()).then(pb.cmp(pa)))
            .map(|(p, ns)| format!("{p}:{}", &s[ns.len()..]))
    }
}

fn is_plain_local(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        None => return true,
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        Some(_) => return false,
    }
    local.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) && !local.ends_with('.')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn compact_prefers_longest_namespace() {
        let mut prefixes = BTreeMap::new();
        prefixes.insert("ex".to_string(), "http://ex/".to_string());
        prefixes.insert("exo".to_string(), "http://ex/onto#".to_string());
        let g = OntologyGraph::from_parts("t", [], prefixes);
        assert_eq!(g.compact(&iri("http://ex/onto#A")).as_deref(), Some("exo:A"));
        assert_eq!(g.compact(&iri("http://ex/B")).as_deref(), Some("ex:B"));
        assert_eq!(g.compact(&iri("http://other/B")), None);
        assert_eq!(g.compact(&iri("http://ex/a(b)")), None);
    }

    #[test]
    fn duplicate_triples_collapse() {
        let t = Triple::new(iri("http://a"), iri("http://p"), iri("http://b"));
        let g = OntologyGraph::from_parts("t", [t.clone(), t], BTreeMap::new());
        assert_eq!(g.len(), 1);
    }
}
