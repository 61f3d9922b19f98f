//! Prompt templates with `{name}` placeholders.
//!
//! A placeholder is `{` followed by an identifier (`[A-Za-z_][A-Za-z0-9_]*`)
//! and `}`. Any other brace is literal text, so JSON snippets can sit in a
//! template body without escaping. Substitution is a single left-to-right
//! pass: bound values are never re-scanned for placeholders.

use std::collections::{BTreeMap, BTreeSet};

use super::GatewayError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub template_id: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment<'a> {
    Text(&'a str),
    Placeholder(&'a str),
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn segments(body: &str) -> Vec<Segment<'_>> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut text_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' && i + 1 < bytes.len() && is_ident_start(bytes[i + 1]) {
            let mut j = i + 2;
            while j < bytes.len() && is_ident_continue(bytes[j]) {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'}' {
                if text_start < i {
                    out.push(Segment::Text(&body[text_start..i]));
                }
                out.push(Segment::Placeholder(&body[i + 1..j]));
                i = j + 1;
                text_start = i;
                continue;
            }
        }
        i += 1;
    }
    if text_start < body.len() {
        out.push(Segment::Text(&body[text_start..]));
    }
    out
}

impl PromptTemplate {
    pub fn new(template_id: impl Into<String>, body: impl Into<String>) -> Self {
        Self { template_id: template_id.into(), body: body.into() }
    }

    /// Distinct placeholder names, sorted.
    pub fn placeholders(&self) -> BTreeSet<&str> {
        segments(&self.body)
            .into_iter()
            .filter_map(|s| match s {
                Segment::Placeholder(name) => Some(name),
                Segment::Text(_) => None,
            })
            .collect()
    }

    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        let missing: Vec<String> = self
            .placeholders()
            .into_iter()
            .filter(|name| !bindings.contains_key(*name))
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(GatewayError::MissingBinding(missing));
        }
        let mut out = String::with_capacity(self.body.len());
        for segment in segments(&self.body) {
            match segment {
                Segment::Text(t) => out.push_str(t),
                Segment::Placeholder(name) => out.push_str(&bindings[name]),
            }
        }
        Ok(out)
    }
}

/// A set of templates addressable by id.
#[derive(Debug, Clone, Default)]
pub struct PromptLibrary {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.template_id.clone(), template);
    }

    pub fn get(&self, template_id: &str) -> Option<&PromptTemplate> {
        self.templates.get(template_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn render_prompt(
        &self,
        template_id: &str,
        bindings: &BTreeMap<String, String>,
    ) -> Result<String, GatewayError> {
        self.get(template_id)
            .ok_or_else(|| GatewayError::UnknownTemplate(template_id.to_string()))?
            .render(bindings)
    }
}

impl FromIterator<PromptTemplate> for PromptLibrary {
    fn from_iter<I: IntoIterator<Item = PromptTemplate>>(iter: I) -> Self {
        let mut lib = PromptLibrary::new();
        for t in iter {
            lib.insert(t);
        }
        lib
    }
}
