//! Turtle writers: whole documents and per-entity snippets.
//!
//! Output is deterministic. Subjects appear in term order, predicates sorted
//! by IRI. Blank nodes referenced exactly once are written inline (`[ ... ]`
//! or `( ... )` for well-formed collections); all others get a `_:bN` label
//! and their own block.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::graph::OntologyGraph;
use super::term::{BlankNode, Iri, Literal, Term};
use super::vocab;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnippetError {
    #[error("entity <{0}> does not occur as a subject")]
    UnknownEntity(Iri),
}

/// `@prefix` lines for every declared prefix.
pub fn prefix_block(graph: &OntologyGraph) -> String {
    let mut out = String::new();
    for (p, ns) in graph.prefixes() {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }
    out
}

/// Turtle fragment describing `entity`: its direct triples plus every blank
/// node reachable from them. The fragment uses the graph's prefixes without
/// declaring them; prepend [`prefix_block`] to make it parseable.
pub fn serialize_snippet(graph: &OntologyGraph, entity: &Iri) -> Result<String, SnippetError> {
    let subject = Term::Iri(entity.clone());
    if !graph.has_subject(&subject) {
        return Err(SnippetError::UnknownEntity(entity.clone()));
    }
    let closure = graph.blank_closure(&subject);
    let writer = Writer::new(graph, &closure, std::slice::from_ref(&subject));
    let mut out = format!("###  {entity}\n");
    writer.write_all(&mut out);
    Ok(out)
}

/// Full document: prefix declarations followed by every subject block.
pub fn serialize_document(graph: &OntologyGraph) -> String {
    let blanks: BTreeSet<BlankNode> = graph
        .triples()
        .iter()
        .flat_map(|t| [t.subject.as_blank(), t.object.as_blank()])
        .flatten()
        .collect();
    let roots: Vec<Term> = graph.subjects().filter(|s| !s.is_blank()).cloned().collect();
    let writer = Writer::new(graph, &blanks, &roots);
    let mut out = prefix_block(graph);
    if !out.is_empty() {
        out.push('\n');
    }
    writer.write_all(&mut out);
    out
}

struct Writer<'g> {
    graph: &'g OntologyGraph,
    roots: Vec<Term>,
    blanks: BTreeSet<BlankNode>,
    inline: BTreeSet<BlankNode>,
}

impl<'g> Writer<'g> {
    fn new(graph: &'g OntologyGraph, blanks: &BTreeSet<BlankNode>, roots: &[Term]) -> Self {
        let mut refs: BTreeMap<BlankNode, usize> = BTreeMap::new();
        for t in graph.triples() {
            if let Term::Blank(b) = t.object {
                *refs.entry(b).or_default() += 1;
            }
        }
        let inline = blanks.iter().copied().filter(|b| refs.get(b) == Some(&1)).collect();
        Self { graph, roots: roots.to_vec(), blanks: blanks.clone(), inline }
    }

    fn write_all(mut self, out: &mut String) {
        let mut emitted = BTreeSet::new();
        let roots = std::mem::take(&mut self.roots);
        for root in &roots {
            self.subject_block(root, out, &mut emitted);
        }
        // Blank nodes that are referenced more than once (or never) get their
        // own labeled block.
        let labeled: Vec<BlankNode> = self.blanks.iter().copied().filter(|b| !self.inline.contains(b)).collect();
        for b in labeled {
            if self.graph.has_subject(&Term::Blank(b)) {
                self.subject_block(&Term::Blank(b), out, &mut emitted);
            }
        }
        // Pure cycles of singly-referenced blank nodes are unreachable from
        // any root; break each by labeling its smallest member.
        loop {
            let pending = self
                .blanks
                .iter()
                .copied()
                .find(|b| !emitted.contains(b) && self.graph.has_subject(&Term::Blank(*b)));
            let Some(b) = pending else { break };
            self.inline.remove(&b);
            self.subject_block(&Term::Blank(b), out, &mut emitted);
        }
    }

    fn subject_block(&self, subject: &Term, out: &mut String, emitted: &mut BTreeSet<BlankNode>) {
        if let Term::Blank(b) = subject {
            emitted.insert(*b);
        }
        let head = self.term(subject);
        out.push_str(&head);
        let indent = 4;
        self.predicate_objects(subject, indent, out, emitted);
        out.push_str(" .\n");
    }

    fn predicate_objects(&self, subject: &Term, indent: usize, out: &mut String, emitted: &mut BTreeSet<BlankNode>) {
        let pairs = self.graph.describe(subject);
        let mut first = true;
        let mut i = 0;
        while i < pairs.len() {
            let predicate = &pairs[i].0;
            if first {
                out.push(' ');
                first = false;
            } else {
                out.push_str(" ;\n");
                out.push_str(&" ".repeat(indent));
            }
            out.push_str(&self.iri(predicate));
            out.push(' ');
            let mut first_object = true;
            while i < pairs.len() && &pairs[i].0 == predicate {
                if !first_object {
                    out.push_str(" , ");
                }
                first_object = false;
                self.object(&pairs[i].1, indent + 4, out, emitted);
                i += 1;
            }
        }
    }

    fn object(&self, object: &Term, indent: usize, out: &mut String, emitted: &mut BTreeSet<BlankNode>) {
        if let Term::Blank(b) = object {
            if self.inline.contains(b) && !emitted.contains(b) {
                if let Some(items) = self.inline_list(object) {
                    self.mark_list(object, emitted);
                    out.push('(');
                    for item in &items {
                        out.push(' ');
                        self.object(item, indent + 4, out, emitted);
                    }
                    out.push_str(" )");
                    return;
                }
                emitted.insert(*b);
                if self.graph.describe(object).is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                self.predicate_objects(object, indent, out, emitted);
                out.push_str(" ]");
                return;
            }
        }
        out.push_str(&self.term(object));
    }

    /// Items of a collection that can be written with `( ... )`: every cell
    /// is an inline blank node carrying exactly `rdf:first` and `rdf:rest`.
    fn inline_list(&self, head: &Term) -> Option<Vec<Term>> {
        let mut cursor = head.clone();
        let mut items = Vec::new();
        let mut seen = BTreeSet::new();
        loop {
            if cursor.as_iri().is_some_and(|i| i.as_str() == vocab::RDF_NIL) {
                return if items.is_empty() { None } else { Some(items) };
            }
            let b = cursor.as_blank()?;
            if !self.inline.contains(&b) || !seen.insert(b) {
                return None;
            }
            let pairs = self.graph.describe(&cursor);
            if pairs.len() != 2 || pairs[0].0.as_str() != vocab::RDF_FIRST || pairs[1].0.as_str() != vocab::RDF_REST {
                return None;
            }
            items.push(pairs[0].1.clone());
            cursor = pairs[1].1.clone();
        }
    }

    fn mark_list(&self, head: &Term, emitted: &mut BTreeSet<BlankNode>) {
        let mut cursor = head.clone();
        while let Some(b) = cursor.as_blank() {
            emitted.insert(b);
            match self.graph.objects(&cursor, vocab::RDF_REST).next() {
                Some(next) => cursor = next.clone(),
                None => break,
            }
        }
    }

    fn iri(&self, iri: &Iri) -> String {
        self.graph.compact(iri).unwrap_or_else(|| format!("<{iri}>"))
    }

    fn term(&self, term: &Term) -> String {
        match term {
            Term::Iri(iri) => self.iri(iri),
            Term::Blank(b) => b.to_string(),
            Term::Literal(l) => self.literal(l),
        }
    }

    fn literal(&self, l: &Literal) -> String {
        let mut s = String::with_capacity(l.lexical.len() + 2);
        s.push('"');
        for c in l.lexical.chars() {
            match c {
                '"' => s.push_str("\\\""),
                '\\' => s.push_str("\\\\"),
                '\n' => s.push_str("\\n"),
                '\r' => s.push_str("\\r"),
                '\t' => s.push_str("\\t"),
                c => s.push(c),
            }
        }
        s.push('"');
        if let Some(lang) = &l.language {
            s.push('@');
            s.push_str(lang);
        } else if let Some(dt) = &l.datatype {
            s.push_str("^^");
            s.push_str(&self.iri(dt));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{isomorphic, parse_turtle};

    const DOC: &str = "@prefix : <http://x#> .\n\
        @prefix owl: <http://www.w3.org/2002/07/owl#> .\n\
        :p :domain [ a owl:Class ; owl:unionOf ( :A :B ) ] ; :label \"p\" .\n\
        :q :x _:shared . :r :x _:shared . _:shared :y \"v\\\"q\" .\n\
        _:c1 :next _:c2 . _:c2 :next _:c1 .\n\
        :s :t [] .\n";

    #[test]
    fn full_document_round_trips_up_to_blank_renaming() {
        let g = parse_turtle(DOC, "doc").unwrap();
        let text = serialize_document(&g);
        let back = parse_turtle(&text, "doc").unwrap();
        assert!(isomorphic(&g, &back), "{text}");
    }

    #[test]
    fn union_domain_written_inline() {
        let g = parse_turtle(DOC, "doc").unwrap();
        let snippet = serialize_snippet(&g, &Iri::new("http://x#p").unwrap()).unwrap();
        assert!(snippet.contains("owl:unionOf ( :A :B )"), "{snippet}");
        assert!(!snippet.contains("_:b"));
    }

    #[test]
    fn shared_blank_node_gets_label_in_snippet() {
        let g = parse_turtle(DOC, "doc").unwrap();
        let snippet = serialize_snippet(&g, &Iri::new("http://x#q").unwrap()).unwrap();
        let reparsed = parse_turtle(&(prefix_block(&g) + &snippet), "snip").unwrap();
        let closure = OntologyGraph::from_parts("c", g.subject_closure(&Term::Iri(Iri::new("http://x#q").unwrap())), Default::default());
        assert!(isomorphic(&closure, &reparsed), "{snippet}");
    }

    #[test]
    fn unknown_entity() {
        let g = parse_turtle(DOC, "doc").unwrap();
        assert!(matches!(
            serialize_snippet(&g, &Iri::new("http://x#nope").unwrap()),
            Err(SnippetError::UnknownEntity(_))
        ));
    }
}
