use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TemplateName {
    UploadOntology,
    QueryEntities,
    Confirm,
    SuggestModules,
    ModuleInfo,
    ZeroShot,
}

impl TemplateName {
    pub const ALL: [TemplateName; 6] = [
        TemplateName::UploadOntology,
        TemplateName::QueryEntities,
        TemplateName::Confirm,
        TemplateName::SuggestModules,
        TemplateName::ModuleInfo,
        TemplateName::ZeroShot,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateName::UploadOntology => "upload_ontology.txt",
            TemplateName::QueryEntities => "query_entities.txt",
            TemplateName::Confirm => "confirm.txt",
            TemplateName::SuggestModules => "suggest_modules.txt",
            TemplateName::ModuleInfo => "module_info.txt",
            TemplateName::ZeroShot => "zero_shot.txt",
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            TemplateName::UploadOntology => include_str!("../../templates/upload_ontology.txt"),
            TemplateName::QueryEntities => include_str!("../../templates/query_entities.txt"),
            TemplateName::Confirm => include_str!("../../templates/confirm.txt"),
            TemplateName::SuggestModules => include_str!("../../templates/suggest_modules.txt"),
            TemplateName::ModuleInfo => include_str!("../../templates/module_info.txt"),
            TemplateName::ZeroShot => include_str!("../../templates/zero_shot.txt"),
        }
    }
}

pub const PLACEHOLDERS: [&str; 6] =
    ["ontology_text", "snippets", "module_names", "module_blocks", "source_name", "target_name"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("{file}: unknown placeholder {{{{{name}}}}}")]
    UnknownPlaceholder { file: String, name: String },
    #[error("{file}: unterminated placeholder")]
    Unterminated { file: String },
    #[error("{file}: no value for placeholder {{{{{name}}}}}")]
    MissingValue { file: String, name: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Prompt wording, one text per stage, with `{{placeholder}}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub version: String,
    texts: BTreeMap<TemplateName, String>,
}

impl Default for Templates {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Templates {
    pub fn builtin() -> Self {
        let texts = TemplateName::ALL.iter().map(|n| (*n, n.builtin().to_string())).collect();
        Templates { version: include_str!("../../templates/version.txt").trim().to_string(), texts }
    }

    /// Built-in templates overridden by any same-named files in `dir`;
    /// `version.txt` there replaces the version string.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(TemplateError::Io { path: dir.display().to_string(), message: "not a directory".into() });
        }
        let mut t = Self::builtin();
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| TemplateError::Io { path: p.display().to_string(), message: e.to_string() })
        };
        let mut overridden = false;
        for name in TemplateName::ALL {
            let p = dir.join(name.file_name());
            if p.exists() {
                let text = read(&p)?;
                check(&text, name.file_name())?;
                t.texts.insert(name, text);
                overridden = true;
            }
        }
        let vp = dir.join("version.txt");
        if vp.exists() {
            t.version = read(&vp)?.trim().to_string();
        } else if overridden {
            t.version = format!("{}+custom", t.version);
        }
        Ok(t)
    }

    pub fn text(&self, name: TemplateName) -> &str {
        &self.texts[&name]
    }

    /// Substitutes every placeholder; a placeholder without a value is an
    /// error. One trailing newline of the template is dropped.
    pub fn render(&self, name: TemplateName, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        let text = self.text(name);
        let text = text.strip_suffix('\n').unwrap_or(text);
        let file = name.file_name();
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        while let Some(open) = rest.find("{{") {
            out.push_str(&rest[..open]);
            let after = &rest[open + 2..];
            let close = after.find("}}").ok_or_else(|| TemplateError::Unterminated { file: file.into() })?;
            let key = after[..close].trim();
            if !PLACEHOLDERS.contains(&key) {
                return Err(TemplateError::UnknownPlaceholder { file: file.into(), name: key.into() });
            }
            let value = values
                .iter()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| TemplateError::MissingValue { file: file.into(), name: key.into() })?;
            out.push_str(value.1);
            rest = &after[close + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

fn check(text: &str, file: &str) -> Result<(), TemplateError> {
    let mut rest = text;
    while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        let close = after.find("}}").ok_or_else(|| TemplateError::Unterminated { file: file.into() })?;
        let key = after[..close].trim();
        if !PLACEHOLDERS.contains(&key) {
            return Err(TemplateError::UnknownPlaceholder { file: file.into(), name: key.into() });
        }
        rest = &after[close + 2..];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_well_formed() {
        let t = Templates::builtin();
        for name in TemplateName::ALL {
            check(t.text(name), name.file_name()).unwrap();
        }
        assert_eq!(t.render(TemplateName::Confirm, &[]).unwrap(), "Yes");
        assert_eq!(t.version, "1");
    }

    #[test]
    fn render_substitutes() {
        let t = Templates::builtin();
        let out = t
            .render(
                TemplateName::SuggestModules,
                &[("module_names", "- FundingAward"), ("source_name", "GBO"), ("target_name", "GMO")],
            )
            .unwrap();
        assert!(out.contains("- FundingAward"));
        assert!(!out.contains("{{"));
        let err = t.render(TemplateName::SuggestModules, &[("module_names", "x")]).unwrap_err();
        assert!(matches!(err, TemplateError::MissingValue { .. }));
    }

    #[test]
    fn directory_override() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("confirm.txt"), "Yes, please go ahead.\n").unwrap();
        let t = Templates::load_dir(dir.path()).unwrap();
        assert_eq!(t.render(TemplateName::Confirm, &[]).unwrap(), "Yes, please go ahead.");
        assert_eq!(t.version, "1+custom");
        std::fs::write(dir.path().join("confirm.txt"), "{{colour}}").unwrap();
        assert!(matches!(Templates::load_dir(dir.path()), Err(TemplateError::UnknownPlaceholder { .. })));
    }
}
