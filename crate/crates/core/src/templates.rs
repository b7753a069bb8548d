//! Versioned prompt templates.
//!
//! Placeholders are `{name}` or `${name}`. `${name === 'lit' ? 'a' : 'b'}` picks a branch
//! by comparing a text variable. A line holding only `{#each list}` starts a block that is
//! repeated per list element until a line holding `{/each}`; inside it `{item}`, `{n}`
//! (1-based) and `{sep}` (`,` except after the last element) are bound.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TEMPLATE_VERSION: &str = "v1";

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("missing template variable `{0}`")]
    MissingVariable(String),
    #[error("variable `{name}` must be a {expected}")]
    WrongKind { name: String, expected: &'static str },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("malformed template: {0}")]
    Malformed(String),
    #[error("io error reading template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    VideoAnalysis,
    MusicAnalysis,
    EditExpansion,
    BlendExpansion,
    PromptModifiers,
    VisualAnchors,
    SceneKeywords,
    BaselineThumbnail,
}

impl TemplateId {
    pub const ALL: [TemplateId; 8] = [
        TemplateId::VideoAnalysis,
        TemplateId::MusicAnalysis,
        TemplateId::EditExpansion,
        TemplateId::BlendExpansion,
        TemplateId::PromptModifiers,
        TemplateId::VisualAnchors,
        TemplateId::SceneKeywords,
        TemplateId::BaselineThumbnail,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::VideoAnalysis => "video_analysis",
            TemplateId::MusicAnalysis => "music_analysis",
            TemplateId::EditExpansion => "edit_expansion",
            TemplateId::BlendExpansion => "blend_expansion",
            TemplateId::PromptModifiers => "prompt_modifiers",
            TemplateId::VisualAnchors => "visual_anchors",
            TemplateId::SceneKeywords => "scene_keywords",
            TemplateId::BaselineThumbnail => "baseline_thumbnail",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.txt", self.as_str())
    }

    fn builtin(self) -> &'static str {
        match self {
            TemplateId::VideoAnalysis => include_str!("../templates/v1/video_analysis.txt"),
            TemplateId::MusicAnalysis => include_str!("../templates/v1/music_analysis.txt"),
            TemplateId::EditExpansion => include_str!("../templates/v1/edit_expansion.txt"),
            TemplateId::BlendExpansion => include_str!("../templates/v1/blend_expansion.txt"),
            TemplateId::PromptModifiers => include_str!("../templates/v1/prompt_modifiers.txt"),
            TemplateId::VisualAnchors => include_str!("../templates/v1/visual_anchors.txt"),
            TemplateId::SceneKeywords => include_str!("../templates/v1/scene_keywords.txt"),
            TemplateId::BaselineThumbnail => {
                include_str!("../templates/v1/baseline_thumbnail.txt")
            }
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemplateValue {
    Text(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variables(pub BTreeMap<String, TemplateValue>);

impl Variables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(mut self, key: &str, value: impl Into<String>) -> Self {
        self.0.insert(key.to_string(), TemplateValue::Text(value.into()));
        self
    }

    pub fn list<S: Into<String>>(mut self, key: &str, values: impl IntoIterator<Item = S>) -> Self {
        let v = values.into_iter().map(Into::into).collect();
        self.0.insert(key.to_string(), TemplateValue::List(v));
        self
    }

    pub fn get(&self, key: &str) -> Option<&TemplateValue> {
        self.0.get(key)
    }

    fn text_of(&self, key: &str) -> Result<&str, TemplateError> {
        match self.0.get(key) {
            Some(TemplateValue::Text(s)) => Ok(s),
            Some(TemplateValue::List(_)) => Err(TemplateError::WrongKind {
                name: key.to_string(),
                expected: "text value",
            }),
            None => Err(TemplateError::MissingVariable(key.to_string())),
        }
    }
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\$\{([A-Za-z_][A-Za-z0-9_]*) === '([^']*)' \? '([^']*)' : '([^']*)'\}|\$?\{([A-Za-z_][A-Za-z0-9_]*)\}",
        )
        .unwrap()
    })
}

fn each_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\{#each ([A-Za-z_][A-Za-z0-9_]*)\}$").unwrap())
}

enum Segment<'a> {
    Lines(Vec<&'a str>),
    Each { list: String, body: Vec<&'a str> },
}

fn segments(text: &str) -> Result<Vec<Segment<'_>>, TemplateError> {
    let mut out = Vec::new();
    let mut plain = Vec::new();
    let mut lines = text.split('\n');
    while let Some(line) = lines.next() {
        if let Some(c) = each_re().captures(line.trim()) {
            if !plain.is_empty() {
                out.push(Segment::Lines(std::mem::take(&mut plain)));
            }
            let mut body = Vec::new();
            loop {
                match lines.next() {
                    Some(l) if l.trim() == "{/each}" => break,
                    Some(l) => body.push(l),
                    None => return Err(TemplateError::Malformed("unterminated {#each}".into())),
                }
            }
            out.push(Segment::Each { list: c[1].to_string(), body });
        } else if line.trim() == "{/each}" {
            return Err(TemplateError::Malformed("{/each} without {#each}".into()));
        } else {
            plain.push(line);
        }
    }
    if !plain.is_empty() {
        out.push(Segment::Lines(plain));
    }
    Ok(out)
}

fn substitute(line: &str, lookup: &dyn Fn(&str) -> Result<String, TemplateError>, vars: &Variables) -> Result<String, TemplateError> {
    let mut err = None;
    let out = placeholder_re().replace_all(line, |c: &Captures| {
        let r = if let Some(name) = c.get(1) {
            vars.text_of(name.as_str()).map(|v| {
                if v == &c[2] { c[3].to_string() } else { c[4].to_string() }
            })
        } else {
            lookup(&c[5])
        };
        match r {
            Ok(s) => s,
            Err(e) => {
                err.get_or_insert(e);
                String::new()
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out.into_owned()),
    }
}

/// Renders template text with the given variables. Substituted values are never re-expanded.
pub fn render_text(text: &str, vars: &Variables) -> Result<String, TemplateError> {
    let mut lines_out: Vec<String> = Vec::new();
    for seg in segments(text)? {
        match seg {
            Segment::Lines(lines) => {
                let lookup = |name: &str| vars.text_of(name).map(str::to_string);
                for l in lines {
                    lines_out.push(substitute(l, &lookup, vars)?);
                }
            }
            Segment::Each { list, body } => {
                let items = match vars.get(&list) {
                    Some(TemplateValue::List(items)) => items,
                    Some(TemplateValue::Text(_)) => {
                        return Err(TemplateError::WrongKind { name: list, expected: "list" })
                    }
                    None => return Err(TemplateError::MissingVariable(list)),
                };
                for (i, item) in items.iter().enumerate() {
                    let sep = if i + 1 < items.len() { "," } else { "" };
                    let lookup = |name: &str| match name {
                        "item" => Ok(item.clone()),
                        "n" => Ok((i + 1).to_string()),
                        "sep" => Ok(sep.to_string()),
                        other => vars.text_of(other).map(str::to_string),
                    };
                    for l in &body {
                        lines_out.push(substitute(l, &lookup, vars)?);
                    }
                }
            }
        }
    }
    Ok(lines_out.join("\n"))
}

/// Names a template reads from its variables, in first-use order.
pub fn required_variables(text: &str) -> Result<Vec<String>, TemplateError> {
    let mut names: Vec<String> = Vec::new();
    let mut push = |n: &str| {
        if !names.iter().any(|x| x == n) {
            names.push(n.to_string());
        }
    };
    for seg in segments(text)? {
        let (lines, scoped) = match &seg {
            Segment::Lines(l) => (l, false),
            Segment::Each { list, body } => {
                push(list);
                (body, true)
            }
        };
        for l in lines {
            for c in placeholder_re().captures_iter(l) {
                let name = c.get(1).or_else(|| c.get(5)).unwrap().as_str();
                if scoped && matches!(name, "item" | "n" | "sep") {
                    continue;
                }
                push(name);
            }
        }
    }
    Ok(names)
}

pub fn checksum(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    version: String,
    texts: BTreeMap<TemplateId, String>,
}

fn strip_final_newline(s: &str) -> String {
    let s = s.strip_suffix('\n').unwrap_or(s);
    s.strip_suffix('\r').unwrap_or(s).to_string()
}

impl TemplateRegistry {
    pub fn builtin() -> Self {
        let texts = TemplateId::ALL
            .into_iter()
            .map(|id| (id, strip_final_newline(id.builtin())))
            .collect();
        let reg = Self { version: TEMPLATE_VERSION.to_string(), texts };
        reg.log_checksums();
        reg
    }

    /// Built-in templates with any `<id>.txt` found in `dir` taking precedence.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut reg = Self::builtin();
        let mut overridden = false;
        for id in TemplateId::ALL {
            let path = dir.join(id.file_name());
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            segments(&text)?;
            reg.texts.insert(id, strip_final_newline(&text));
            overridden = true;
        }
        if overridden {
            reg.version = format!("{TEMPLATE_VERSION}+{}", dir.display());
            reg.log_checksums();
        }
        Ok(reg)
    }

    fn log_checksums(&self) {
        for (id, text) in &self.texts {
            tracing::info!(template = %id, version = %self.version, sha256 = %checksum(text), "template loaded");
        }
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn text(&self, id: TemplateId) -> &str {
        &self.texts[&id]
    }

    pub fn checksums(&self) -> BTreeMap<TemplateId, String> {
        self.texts.iter().map(|(id, t)| (*id, checksum(t))).collect()
    }

    pub fn required_variables(&self, id: TemplateId) -> Vec<String> {
        required_variables(self.text(id)).unwrap_or_default()
    }

    pub fn render(&self, id: TemplateId, vars: &Variables) -> Result<String, TemplateError> {
        render_text(self.text(id), vars)
    }
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
