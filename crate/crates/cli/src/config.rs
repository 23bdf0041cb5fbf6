//! Flat `key = value` run configuration with `${VAR}` interpolation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub const KEYS: &[&str] = &[
    "source",
    "target",
    "rules",
    "registry",
    "templates",
    "aliases",
    "replay",
    "script",
    "source_name",
    "target_name",
    "endpoint",
    "model",
    "key_env",
    "timeout_secs",
    "strategy",
    "temperature",
    "threshold",
    "char_budget",
    "retries",
    "retry_delay_ms",
    "top_k",
    "jobs",
    "format",
    "out_dir",
];

/// Keys whose values are paths, resolved against the config file's folder.
const PATH_KEYS: &[&str] = &["source", "target", "rules", "registry", "templates", "aliases", "replay", "script", "out_dir"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
    base: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), base, |v| std::env::var(v).ok())
    }

    pub fn parse(text: &str, name: &str, base: PathBuf, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{name}:{}: expected `key = value`", n + 1);
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                bail!("{name}:{}: unknown key '{key}'", n + 1);
            }
            let value = interpolate(value.trim(), &env).with_context(|| format!("{name}:{}", n + 1))?;
            if values.insert(key.to_string(), value).is_some() {
                bail!("{name}:{}: duplicate key '{key}'", n + 1);
            }
        }
        Ok(Config { values, base })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(KEYS.contains(&key));
        self.values.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        debug_assert!(PATH_KEYS.contains(&key));
        self.get(key).map(|v| self.base.join(v))
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("config key {key}: {e}")))
            .transpose()
    }
}

/// Replaces `${VAR}` with the variable's value; `$$` is a literal `$`.
/// An unset variable is an error naming it.
fn interpolate(value: &str, env: &impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(value.len());
    let mut rest = value;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        let after = &rest[i + 1..];
        if let Some(tail) = after.strip_prefix('$') {
            out.push('$');
            rest = tail;
        } else if let Some(inner) = after.strip_prefix('{') {
            let Some(close) = inner.find('}') else { bail!("unterminated ${{...}}") };
            let var = &inner[..close];
            match env(var) {
                Some(v) => out.push_str(&v),
                None => bail!("environment variable {var} is not set"),
            }
            rest = &inner[close + 1..];
        } else {
            out.push('$');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(v: &str) -> Option<String> {
        (v == "HOME_DIR").then(|| "/data".to_string())
    }

    #[test]
    fn parses_and_interpolates() {
        let text = "# run\nsource = ${HOME_DIR}/gbo.ttl\nmodel = gpt-4\n\nthreshold = 0.75\nendpoint = http://x/$$1\n";
        let c = Config::parse(text, "c", PathBuf::from("/cfg"), env).unwrap();
        assert_eq!(c.get("source"), Some("/data/gbo.ttl"));
        assert_eq!(c.path("source"), Some(PathBuf::from("/data/gbo.ttl")));
        assert_eq!(c.get("endpoint"), Some("http://x/$1"));
        assert_eq!(c.parsed::<f64>("threshold").unwrap(), Some(0.75));
        assert_eq!(c.get("rules"), None);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let c = Config::parse("rules = rules.txt", "c", PathBuf::from("/cfg"), env).unwrap();
        assert_eq!(c.path("rules"), Some(PathBuf::from("/cfg/rules.txt")));
    }

    #[test]
    fn rejects_bad_lines() {
        let err = |t: &str| Config::parse(t, "c", PathBuf::new(), env).unwrap_err().to_string();
        assert!(err("nonsense").contains("c:1"));
        assert!(err("colour = red").contains("unknown key"));
        assert!(err("model = a\nmodel = b").contains("duplicate"));
        let e = Config::parse("endpoint = ${SECRET_THING}", "c", PathBuf::new(), env).unwrap_err();
        assert!(format!("{e:#}").contains("SECRET_THING is not set"));
    }
}
