//! Turtle parsing, triple graphs, entity inventories and snippet writing.

mod graph;
mod inventory;
mod iso;
mod serialize;
mod term;
mod turtle;
pub mod vocab;

pub use graph::OntologyGraph;
pub use inventory::{build_inventory, EntityInventory, EntityKind, EntityRecord};
pub use iso::{isomorphic, triples_isomorphic};
pub use serialize::{prefix_block, serialize_document, serialize_snippet, SnippetError};
pub use term::{BlankNode, InvalidIri, Iri, Literal, Term, Triple};
pub use turtle::{parse_turtle, ParseError, ParseErrorKind};
