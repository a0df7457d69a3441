use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Ordered class names with the integer value sum queries use. Ignored
/// classes are exempt from count constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocab {
    classes: Vec<String>,
    ignored: Vec<bool>,
    values: Vec<u32>,
}

fn is_class_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

pub(crate) fn is_class_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(is_class_char)
}

impl LabelVocab {
    /// Builds a vocabulary. Values default to the class index, and to 0 for
    /// ignored classes.
    pub fn new<S: AsRef<str>>(
        classes: &[S],
        ignored: &[S],
        values: Option<&[i64]>,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidVocab("no classes".into()));
        }
        let classes: Vec<String> = classes.iter().map(|c| c.as_ref().to_string()).collect();
        for (i, name) in classes.iter().enumerate() {
            if !is_class_name(name) {
                return Err(Error::InvalidVocab(format!(
                    "class name `{name}` must be non-empty [A-Za-z0-9_]"
                )));
            }
            if classes[..i].contains(name) {
                return Err(Error::InvalidVocab(format!("duplicate class `{name}`")));
            }
        }
        let mut ignored_mask = alloc::vec![false; classes.len()];
        for name in ignored {
            let name = name.as_ref();
            let idx = classes
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::UnknownClass(name.to_string()))?;
            ignored_mask[idx] = true;
        }
        let values = match values {
            Some(v) => {
                if v.len() != classes.len() {
                    return Err(Error::LengthMismatch {
                        what: "vocab values",
                        expected: classes.len(),
                        found: v.len(),
                    });
                }
                v.iter()
                    .map(|&x| {
                        u32::try_from(x).map_err(|_| {
                            Error::InvalidVocab(format!("class value {x} must be in [0, 2^32)"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            None => (0..classes.len())
                .map(|i| if ignored_mask[i] { 0 } else { i as u32 })
                .collect(),
        };
        Ok(Self {
            classes,
            ignored: ignored_mask,
            values,
        })
    }

    /// Vocabulary `0..k` named by their decimal index, valued by index.
    pub fn numbered(k: usize) -> Self {
        let names: Vec<String> = (0..k).map(|i| i.to_string()).collect();
        Self::new::<String>(&names, &[], None).expect("numbered vocab is valid")
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn name(&self, class: usize) -> &str {
        &self.classes[class]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn resolve(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownClass(name.to_string()))
    }

    pub fn is_ignored(&self, class: usize) -> bool {
        self.ignored[class]
    }

    pub fn ignored_names(&self) -> impl Iterator<Item = &str> {
        self.classes
            .iter()
            .zip(&self.ignored)
            .filter(|(_, &ig)| ig)
            .map(|(c, _)| c.as_str())
    }

    pub fn value(&self, class: usize) -> u32 {
        self.values[class]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn max_value(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}
