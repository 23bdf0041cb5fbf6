//! Ontology module descriptors, their prompt blocks, and a lexical ranking
//! baseline.
//!
//! Registry file format:
//!
//! ```text
//! ontology: GMO            (optional, before the first record)
//! ---
//! name: FundingAward
//! description:
//! Awards that pay for research work ...
//! ObjectProperty: providesAgentRole
//! DataProperty: hasCurrencyValue
//! Class: FundingAward
//! axioms:
//! FundingAward SubClassOf providesAgentRole some AgentRole
//! ---
//! name: Person
//! ...
//! ```

mod rank;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use rank::{rank_modules, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDescriptor {
    pub name: String,
    pub description: String,
    pub object_properties: Vec<String>,
    pub classes: Vec<String>,
    pub data_properties: Vec<String>,
    pub axioms: Option<String>,
}

impl ModuleDescriptor {
    pub fn listed(&self) -> impl Iterator<Item = &String> {
        self.object_properties.iter().chain(&self.data_properties).chain(&self.classes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleRegistry {
    pub ontology_name: String,
    modules: Vec<ModuleDescriptor>,
}

impl ModuleRegistry {
    pub fn new(ontology_name: impl Into<String>, modules: Vec<ModuleDescriptor>) -> Result<Self, RegistryError> {
        if modules.is_empty() {
            return Err(RegistryError::Empty);
        }
        let mut seen = BTreeSet::new();
        for m in &modules {
            if m.name.trim().is_empty() {
                return Err(RegistryError::Format { line: 0, message: "module without a name".into() });
            }
            if !seen.insert(m.name.as_str()) {
                return Err(RegistryError::DuplicateModule(m.name.clone()));
            }
            if m.description.trim().is_empty() {
                return Err(RegistryError::EmptyDescription(m.name.clone()));
            }
        }
        Ok(ModuleRegistry { ontology_name: ontology_name.into(), modules })
    }

    pub fn modules(&self) -> &[ModuleDescriptor] {
        &self.modules
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ModuleDescriptor> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.modules.iter().map(|m| m.name.as_str()).collect()
    }

    /// Registry file text that [`parse_registry`] reads back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = format!("ontology: {}\n", self.ontology_name);
        for m in &self.modules {
            out.push_str("---\n");
            out.push_str(&record_text(m));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("registry has no modules")]
    Empty,
    #[error("duplicate module name '{0}'")]
    DuplicateModule(String),
    #[error("module '{0}' has an empty description")]
    EmptyDescription(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<ModuleRegistry, RegistryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| RegistryError::Io { path: path.display().to_string(), source })?;
    parse_registry(&text)
}

#[derive(PartialEq)]
enum Section {
    Head,
    Description,
    Listings,
    Axioms,
}

fn listing(line: &str) -> Option<(&'static str, &str)> {
    for key in ["ObjectProperty:", "DataProperty:", "Class:"] {
        if let Some(rest) = line.strip_prefix(key) {
            return Some((key, rest.trim()));
        }
    }
    None
}

fn is_axioms_header(line: &str) -> bool {
    let l = line.trim().to_ascii_lowercase();
    l == "axioms:" || l == "core axioms:"
}

pub fn parse_registry(text: &str) -> Result<ModuleRegistry, RegistryError> {
    let mut ontology_name = String::from("target");
    let mut modules = Vec::new();
    let mut current: Option<(ModuleDescriptor, Section, Vec<String>, Vec<String>)> = None;

    let finish = |cur: Option<(ModuleDescriptor, Section, Vec<String>, Vec<String>)>,
                  modules: &mut Vec<ModuleDescriptor>| {
        if let Some((mut m, _, desc, axioms)) = cur {
            m.description = desc.join("\n").trim().to_string();
            let ax = axioms.join("\n").trim().to_string();
            m.axioms = (!ax.is_empty()).then_some(ax);
            modules.push(m);
        }
    };

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim_end();
        if line.trim() == "---" {
            finish(current.take(), &mut modules);
            continue;
        }
        let Some((module, section, desc, axioms)) = current.as_mut() else {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(name) = t.strip_prefix("name:") {
                let m = ModuleDescriptor {
                    name: name.trim().to_string(),
                    description: String::new(),
                    object_properties: Vec::new(),
                    classes: Vec::new(),
                    data_properties: Vec::new(),
                    axioms: None,
                };
                current = Some((m, Section::Head, Vec::new(), Vec::new()));
            } else if let Some(name) = t.strip_prefix("ontology:") {
                if !modules.is_empty() {
                    return Err(RegistryError::Format {
                        line: line_no,
                        message: "ontology: must precede the first record".into(),
                    });
                }
                ontology_name = name.trim().to_string();
            } else {
                return Err(RegistryError::Format { line: line_no, message: "expected 'name:'".into() });
            }
            continue;
        };
        if *section == Section::Axioms {
            axioms.push(line.to_string());
            continue;
        }
        if is_axioms_header(line) {
            *section = Section::Axioms;
            continue;
        }
        if let Some((key, name)) = listing(line.trim_start()) {
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(RegistryError::Format {
                    line: line_no,
                    message: format!("'{key}' needs a single identifier"),
                });
            }
            *section = Section::Listings;
            let list = match key {
                "ObjectProperty:" => &mut module.object_properties,
                "DataProperty:" => &mut module.data_properties,
                _ => &mut module.classes,
            };
            list.push(name.to_string());
            continue;
        }
        match section {
            Section::Head => {
                let t = line.trim();
                if let Some(rest) = t.strip_prefix("description:") {
                    *section = Section::Description;
                    if !rest.trim().is_empty() {
                        desc.push(rest.trim().to_string());
                    }
                } else if !t.is_empty() {
                    return Err(RegistryError::Format { line: line_no, message: "expected 'description:'".into() });
                }
            }
            Section::Description => desc.push(line.to_string()),
            Section::Listings => {
                if !line.trim().is_empty() {
                    return Err(RegistryError::Format {
                        line: line_no,
                        message: "only typed listing lines or 'axioms:' may follow the listings".into(),
                    });
                }
            }
            Section::Axioms => unreachable!(),
        }
    }
    finish(current.take(), &mut modules);
    ModuleRegistry::new(ontology_name, modules)
}

/// Prose description, a blank line, then one typed line per listed entity:
/// object properties, data properties, classes. Axioms follow when present.
pub fn description_block(module: &ModuleDescriptor) -> String {
    let mut out = module.description.trim().to_string();
    out.push_str("\n\n");
    for p in &module.object_properties {
        out.push_str(&format!("ObjectProperty: {p}\n"));
    }
    for p in &module.data_properties {
        out.push_str(&format!("DataProperty: {p}\n"));
    }
    for c in &module.classes {
        out.push_str(&format!("Class: {c}\n"));
    }
    if let Some(ax) = &module.axioms {
        out.push_str("Core Axioms:\n");
        out.push_str(ax);
        out.push('\n');
    }
    out
}

fn record_text(module: &ModuleDescriptor) -> String {
    format!("name: {}\ndescription:\n{}", module.name, description_block(module))
}
