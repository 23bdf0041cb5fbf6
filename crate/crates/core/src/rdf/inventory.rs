//! Typed entities (classes, object and datatype properties) of a graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::graph::OntologyGraph;
use super::term::{Iri, Term};
use super::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntityKind {
    OntologyClass,
    ObjectProperty,
    DataProperty,
}

impl EntityKind {
    fn from_type(iri: &str) -> Option<Self> {
        match iri {
            vocab::OWL_CLASS => Some(EntityKind::OntologyClass),
            vocab::OWL_OBJECT_PROPERTY => Some(EntityKind::ObjectProperty),
            vocab::OWL_DATATYPE_PROPERTY => Some(EntityKind::DataProperty),
            _ => None,
        }
    }

    pub fn is_property(self) -> bool {
        !matches!(self, EntityKind::OntologyClass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub iri: Iri,
    /// Usually a single kind; punned IRIs keep every declared role.
    pub kinds: BTreeSet<EntityKind>,
    pub label: Option<String>,
    pub comment: Option<String>,
    pub domains: BTreeSet<Iri>,
    pub ranges: BTreeSet<Iri>,
    pub inverse_of: Option<Iri>,
    pub super_classes: BTreeSet<Iri>,
}

impl EntityRecord {
    pub fn local_name(&self) -> &str {
        self.iri.local_name()
    }

    pub fn is_class(&self) -> bool {
        self.kinds.contains(&EntityKind::OntologyClass)
    }

    pub fn is_property(&self) -> bool {
        self.kinds.iter().any(|k| k.is_property())
    }

    /// The kind used for display and for placement decisions: a property
    /// role wins over a class role for punned IRIs.
    pub fn primary_kind(&self) -> EntityKind {
        self.kinds
            .iter()
            .copied()
            .find(|k| k.is_property())
            .unwrap_or(EntityKind::OntologyClass)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityInventory {
    entities: Vec<EntityRecord>,
    diagnostics: Vec<String>,
    prefixes: BTreeMap<String, String>,
}

impl EntityInventory {
    pub fn entities(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    /// Prefix declarations of the source graph.
    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, iri: &Iri) -> Option<&EntityRecord> {
        self.entities
            .binary_search_by(|r| r.iri.cmp(iri))
            .ok()
            .map(|i| &self.entities[i])
    }

    /// Records whose local name equals `name`, in IRI order.
    pub fn by_local_name<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a EntityRecord> + 'a {
        self.entities.iter().filter(move |r| r.local_name() == name)
    }

    pub fn count(&self, kind: EntityKind) -> usize {
        self.entities.iter().filter(|r| r.kinds.contains(&kind)).count()
    }
}

/// One record per IRI subject typed `owl:Class`, `owl:ObjectProperty` or
/// `owl:DatatypeProperty`.
pub fn build_inventory(graph: &OntologyGraph) -> EntityInventory {
    let mut entities = Vec::new();
    let mut diagnostics = Vec::new();
    for subject in graph.subjects() {
        let Term::Iri(iri) = subject else { continue };
        let kinds: BTreeSet<EntityKind> = graph
            .objects(subject, vocab::RDF_TYPE)
            .filter_map(|o| o.as_iri())
            .filter_map(|t| EntityKind::from_type(t.as_str()))
            .collect();
        if kinds.is_empty() {
            continue;
        }
        let has_class = kinds.contains(&EntityKind::OntologyClass);
        let has_property = kinds.iter().any(|k| k.is_property());
        if kinds.len() > 1 {
            let roles: Vec<String> = kinds.iter().map(|k| format!("{k:?}")).collect();
            diagnostics.push(format!(
                "{}: <{iri}> is declared with several roles ({}); keeping all",
                graph.source_name(),
                roles.join(", ")
            ));
        }
        let literal = |pred: &str| {
            graph
                .objects(subject, pred)
                .filter_map(|o| o.as_literal())
                .map(|l| l.lexical.clone())
                .next()
        };
        let mut record = EntityRecord {
            iri: iri.clone(),
            kinds,
            label: literal(vocab::RDFS_LABEL),
            comment: literal(vocab::RDFS_COMMENT),
            domains: BTreeSet::new(),
            ranges: BTreeSet::new(),
            inverse_of: graph
                .objects(subject, vocab::OWL_INVERSE_OF)
                .filter_map(|o| o.as_iri())
                .next()
                .cloned(),
            super_classes: BTreeSet::new(),
        };
        if has_property {
            record.domains = flatten_class_expressions(graph, subject, vocab::RDFS_DOMAIN);
            record.ranges = flatten_class_expressions(graph, subject, vocab::RDFS_RANGE);
        }
        if has_class {
            record.super_classes = graph
                .objects(subject, vocab::RDFS_SUBCLASS_OF)
                .filter_map(|o| o.as_iri())
                .cloned()
                .collect();
        }
        entities.push(record);
    }
    EntityInventory { entities, diagnostics, prefixes: graph.prefixes().clone() }
}

/// Named classes behind `subject pred o`, expanding `owl:unionOf` lists.
fn flatten_class_expressions(graph: &OntologyGraph, subject: &Term, pred: &str) -> BTreeSet<Iri> {
    let mut out = BTreeSet::new();
    for object in graph.objects(subject, pred) {
        match object {
            Term::Iri(iri) => {
                out.insert(iri.clone());
            }
            Term::Blank(_) => {
                for list in graph.objects(object, vocab::OWL_UNION_OF) {
                    for member in graph.list_members(list).unwrap_or_default() {
                        if let Term::Iri(iri) = member {
                            out.insert(iri);
                        }
                    }
                }
            }
            Term::Literal(_) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_turtle;

    #[test]
    fn union_domain_flattens_and_labels_attach() {
        let ttl = "@prefix : <http://x#> .\n\
            @prefix owl: <http://www.w3.org/2002/07/owl#> .\n\
            @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n\
            :p a owl:ObjectProperty ; rdfs:domain [ owl:unionOf ( :A :B :C ) ] ; rdfs:range :D ; rdfs:label \"p\" .\n\
            :A a owl:Class ; rdfs:subClassOf :Top .";
        let inv = build_inventory(&parse_turtle(ttl, "t").unwrap());
        assert_eq!(inv.len(), 2);
        let p = inv.by_local_name("p").next().unwrap();
        assert_eq!(p.domains.len(), 3);
        assert_eq!(p.ranges.len(), 1);
        assert_eq!(p.label.as_deref(), Some("p"));
        assert!(p.super_classes.is_empty());
        let a = inv.by_local_name("A").next().unwrap();
        assert!(a.domains.is_empty());
        assert_eq!(a.super_classes.len(), 1);
    }

    #[test]
    fn untyped_subjects_are_skipped() {
        let inv = build_inventory(&parse_turtle("@prefix : <http://x#> . :a :b :c .", "t").unwrap());
        assert!(inv.is_empty());
    }

    #[test]
    fn punning_keeps_both_roles_with_diagnostic() {
        let ttl = "@prefix : <http://x#> . @prefix owl: <http://www.w3.org/2002/07/owl#> .\n\
            :X a owl:Class , owl:ObjectProperty .";
        let inv = build_inventory(&parse_turtle(ttl, "t").unwrap());
        assert_eq!(inv.len(), 1);
        assert!(inv.entities()[0].is_class() && inv.entities()[0].is_property());
        assert_eq!(inv.diagnostics().len(), 1);
    }
}
