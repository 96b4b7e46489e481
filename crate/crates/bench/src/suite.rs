//! Named GEMV shape suites, stored as editable JSON files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use ulb_core::kernels::MAX_COLS;
use ulb_core::layout::{BLOCK_M, K_GROUP};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("suite {suite}: shape {m}x{k} violates layout rules (M % {BLOCK_M}, K % {K_GROUP}, K <= {MAX_COLS})")]
    InvalidShape { suite: String, m: usize, k: usize },
    #[error("suite {0} has no shapes")]
    Empty(String),
    #[error("unknown suite {0:?}; built-ins are falcon3-1b, mobilellm-1.5b, llama3-8b")]
    Unknown(String),
    #[error("reading suite file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing suite file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    /// Output features (rows).
    pub m: usize,
    /// Input features (contraction length).
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    /// Taken from the public model configuration rather than measured data.
    #[serde(default)]
    pub derived: bool,
}

impl Shape {
    pub fn new(m: usize, k: usize) -> Self {
        Self { m, k, role: None, derived: false }
    }

    pub fn is_valid(&self) -> bool {
        self.m > 0 && self.m.is_multiple_of(BLOCK_M) && self.k > 0 && self.k.is_multiple_of(K_GROUP) && self.k <= MAX_COLS
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeSuite {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub shapes: Vec<Shape>,
}

const BUILTIN: [(&str, &str); 3] = [
    ("falcon3-1b", include_str!("../suites/falcon3-1b.json")),
    ("mobilellm-1.5b", include_str!("../suites/mobilellm-1.5b.json")),
    ("llama3-8b", include_str!("../suites/llama3-8b.json")),
];

impl ShapeSuite {
    /// A one-shape suite named `custom`.
    pub fn single(m: usize, k: usize) -> Result<Self, SuiteError> {
        let s = Self { name: "custom".into(), description: None, shapes: vec![Shape::new(m, k)] };
        s.validate()?;
        Ok(s)
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    pub fn builtin(name: &str) -> Result<Self, SuiteError> {
        let (_, text) = BUILTIN
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .ok_or_else(|| SuiteError::Unknown(name.to_owned()))?;
        Self::from_json(text)
    }

    /// A built-in suite name, or a path to a suite JSON file.
    pub fn load(name_or_path: &str) -> Result<Self, SuiteError> {
        match Self::builtin(name_or_path) {
            Err(SuiteError::Unknown(_)) if Path::new(name_or_path).is_file() => {
                Self::from_json(&std::fs::read_to_string(name_or_path)?)
            }
            r => r,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SuiteError> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite serialises")
    }

    pub fn validate(&self) -> Result<(), SuiteError> {
        if self.shapes.is_empty() {
            return Err(SuiteError::Empty(self.name.clone()));
        }
        match self.shapes.iter().find(|s| !s.is_valid()) {
            Some(s) => Err(SuiteError::InvalidShape { suite: self.name.clone(), m: s.m, k: s.k }),
            None => Ok(()),
        }
    }
}
