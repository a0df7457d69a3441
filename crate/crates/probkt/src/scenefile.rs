//! Line-delimited scene files.
//!
//! The first line is a header declaring the vocabulary; every further
//! non-blank line is one scene:
//!
//! ```text
//! {"vocab":["A","B"],"ignored":[],"format_version":1}
//! {"id":"s0","beliefs":[[0.6,0.4],[0.3,0.7]],"query":"count_objects([A,B],[1,1])"}
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use probkt_core::scene::validate_scene;
use probkt_core::{qlang, LabelVocab, Scene, SceneRecord};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub vocab: Vec<String>,
    #[serde(default)]
    pub ignored: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<i64>>,
    pub format_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: String,
    pub beliefs: Vec<Vec<f64>>,
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub vocab: LabelVocab,
    pub scenes: Vec<Scene>,
}

impl SceneFile {
    pub fn find(&self, id: &str) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.id == id)
    }
}

impl Header {
    pub fn for_vocab(vocab: &LabelVocab) -> Self {
        let default_values = (0..vocab.len())
            .all(|c| vocab.value(c) == if vocab.is_ignored(c) { 0 } else { c as u32 });
        Header {
            vocab: vocab.classes().to_vec(),
            ignored: vocab.ignored_names().map(String::from).collect(),
            values: (!default_values)
                .then(|| vocab.values().iter().map(|&v| i64::from(v)).collect()),
            format_version: FORMAT_VERSION,
        }
    }

    pub fn vocab(&self) -> Result<LabelVocab, CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Input(format!(
                "line 1: unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        LabelVocab::new(&self.vocab, &self.ignored, self.values.as_deref())
            .map_err(|e| CliError::core("line 1", e))
    }
}

pub fn read_path(path: &Path) -> Result<SceneFile, CliError> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read(std::io::BufReader::new(file))
}

pub fn read(reader: impl BufRead) -> Result<SceneFile, CliError> {
    let mut vocab: Option<LabelVocab> = None;
    let mut scenes = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| CliError::Io {
            path: format!("line {lineno}"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let bad_json = |e: serde_json::Error| CliError::Input(format!("line {lineno}: {e}"));
        let Some(vocab) = &vocab else {
            let header: Header = serde_json::from_str(&line).map_err(bad_json)?;
            vocab = Some(header.vocab()?);
            continue;
        };
        let rec: Line = serde_json::from_str(&line).map_err(bad_json)?;
        let context = format!("line {lineno} (scene {})", rec.id);
        let query = qlang::parse(&rec.query, vocab).map_err(|e| CliError::core(&context, e))?;
        let record = SceneRecord {
            id: rec.id,
            beliefs: rec.beliefs,
            features: rec.features,
            gold_labels: rec.gold_labels,
            query: Some(query),
        };
        scenes.push(validate_scene(&record, vocab).map_err(|e| CliError::core(&context, e))?);
    }
    let vocab = vocab.ok_or_else(|| CliError::Input("missing header line".into()))?;
    Ok(SceneFile { vocab, scenes })
}

/// Writes a header and one line per scene. Scenes without a query are
/// written with the tautology `count_objects([],[])`.
pub fn write(mut w: impl Write, vocab: &LabelVocab, scenes: &[Scene]) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &Header::for_vocab(vocab))?;
    writeln!(w)?;
    for s in scenes {
        let rec = s.to_record(vocab);
        let line = Line {
            id: rec.id,
            beliefs: rec.beliefs,
            query: rec.query.map_or_else(
                || "count_objects([],[])".into(),
                |q| qlang::print(&q, vocab),
            ),
            features: rec.features,
            gold_labels: rec.gold_labels,
        };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w)?;
    }
    Ok(())
}
