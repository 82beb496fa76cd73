//! Query-specific text generation for generative feedback.
//!
//! Ten subtasks each prompt a text-completion model for a different kind of
//! text about the query (keyword lists through full news articles). Prompts
//! are rendered from overridable templates, sent through a
//! [`CompletionClient`], and cached on disk so experiments can be re-run
//! offline.

mod bundle;
mod cache;
mod client;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bundle::{
    load_bundle, save_bundle, GenerationBundle, GenerationSource, BUNDLE_FORMAT_VERSION,
};
pub use cache::{generate_bundle, CacheEntry, GenerationCache};
pub use client::{
    build_client, generate, ClientMode, Completion, CompletionClient, CompletionRequest,
    FixtureClient, HttpTransport, LiveClient, RetryPolicy, Transport, TransportError, API_BASE_ENV,
    API_KEY_ENV,
};

/// The ten generation subtasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subtask {
    Keywords,
    Entities,
    CotKeywords,
    CotEntities,
    Queries,
    Summary,
    Facts,
    Document,
    Essay,
    News,
}

impl Subtask {
    pub const ALL: [Subtask; 10] = [
        Subtask::Keywords,
        Subtask::Entities,
        Subtask::CotKeywords,
        Subtask::CotEntities,
        Subtask::Queries,
        Subtask::Summary,
        Subtask::Facts,
        Subtask::Document,
        Subtask::Essay,
        Subtask::News,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subtask::Keywords => "keywords",
            Subtask::Entities => "entities",
            Subtask::CotKeywords => "cot_keywords",
            Subtask::CotEntities => "cot_entities",
            Subtask::Queries => "queries",
            Subtask::Summary => "summary",
            Subtask::Facts => "facts",
            Subtask::Document => "document",
            Subtask::Essay => "essay",
            Subtask::News => "news",
        }
    }

    /// Completion token budget. Facts has no published budget; it gets 256
    /// like the other medium-length subtasks.
    pub fn max_tokens(self) -> u32 {
        match self {
            Subtask::Keywords | Subtask::Entities => 64,
            Subtask::CotKeywords
            | Subtask::CotEntities
            | Subtask::Queries
            | Subtask::Summary
            | Subtask::Facts => 256,
            Subtask::Document | Subtask::Essay | Subtask::News => 512,
        }
    }

    pub fn default_template(self) -> &'static str {
        match self {
            Subtask::Keywords => include_str!("../../data/prompts/keywords.txt"),
            Subtask::Entities => include_str!("../../data/prompts/entities.txt"),
            Subtask::CotKeywords => include_str!("../../data/prompts/cot_keywords.txt"),
            Subtask::CotEntities => include_str!("../../data/prompts/cot_entities.txt"),
            Subtask::Queries => include_str!("../../data/prompts/queries.txt"),
            Subtask::Summary => include_str!("../../data/prompts/summary.txt"),
            Subtask::Facts => include_str!("../../data/prompts/facts.txt"),
            Subtask::Document => include_str!("../../data/prompts/document.txt"),
            Subtask::Essay => include_str!("../../data/prompts/essay.txt"),
            Subtask::News => include_str!("../../data/prompts/news.txt"),
        }
    }

    fn valid_names() -> String {
        Subtask::ALL
            .iter()
            .map(|s| s.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for Subtask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subtask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subtask::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownSubtask {
                name: s.to_string(),
                valid: Subtask::valid_names(),
            })
    }
}

impl Serialize for Subtask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Subtask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Either every subtask or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubtaskSelection {
    All,
    Only(Vec<Subtask>),
}

impl SubtaskSelection {
    pub fn resolve(&self) -> Vec<Subtask> {
        match self {
            SubtaskSelection::All => Subtask::ALL.to_vec(),
            SubtaskSelection::Only(list) => list.clone(),
        }
    }
}

impl FromStr for SubtaskSelection {
    type Err = Error;

    /// `all` or a comma-separated list of subtask names.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "all" {
            return Ok(SubtaskSelection::All);
        }
        let list = s
            .split(',')
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .map(Subtask::from_str)
            .collect::<Result<Vec<_>>>()?;
        if list.is_empty() {
            return Err(Error::Config("empty subtask list".into()));
        }
        Ok(SubtaskSelection::Only(list))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskSpec {
    pub subtask: Subtask,
    pub max_tokens: u32,
    pub prompt_template: String,
}

impl SubtaskSpec {
    pub fn default_for(subtask: Subtask) -> Self {
        Self {
            subtask,
            max_tokens: subtask.max_tokens(),
            prompt_template: subtask.default_template().to_string(),
        }
    }

    /// Specs for all ten subtasks with the shipped templates.
    pub fn defaults() -> Vec<SubtaskSpec> {
        Subtask::ALL.into_iter().map(Self::default_for).collect()
    }

    pub fn with_template(mut self, template: impl Into<String>) -> Result<Self> {
        self.prompt_template = template.into();
        check_template(&self.prompt_template)?;
        Ok(self)
    }
}

const PLACEHOLDER: &str = "{query}";

fn check_template(template: &str) -> Result<()> {
    match template.matches(PLACEHOLDER).count() {
        1 => Ok(()),
        0 => Err(Error::Config(
            "prompt template has no {query} placeholder".into(),
        )),
        n => Err(Error::Config(format!(
            "prompt template has {n} {{query}} placeholders; expected exactly one"
        ))),
    }
}

/// Substitutes the query into the template. The query is inserted
/// literally; braces inside it are not interpreted.
///
/// ```
/// use grf::generation::{render_prompt, Subtask, SubtaskSpec};
///
/// let spec = SubtaskSpec::default_for(Subtask::Keywords)
///     .with_template("List keywords for: {query}")
///     .unwrap();
/// assert_eq!(render_prompt(&spec, "solar power").unwrap(), "List keywords for: solar power");
/// ```
pub fn render_prompt(spec: &SubtaskSpec, query_text: &str) -> Result<String> {
    check_template(&spec.prompt_template)?;
    if query_text.trim().is_empty() {
        return Err(Error::Config("empty query text".into()));
    }
    Ok(spec.prompt_template.replacen(PLACEHOLDER, query_text, 1))
}

/// Sampling parameters sent with every completion request. Fields missing
/// from a stored record take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub model_id: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.7,
            top_p: 1.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            model_id: "gpt-3.5-turbo-instruct".to_string(),
        }
    }
}
