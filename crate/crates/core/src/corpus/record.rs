use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names recognised as a header row (compared case-insensitively).
const HEADER: [&str; 4] = [
    "eng human",
    "malay human",
    "malay google translate",
    "eng google translate",
];

/// One row of the bilingual email corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmailRecord {
    pub eng_human: String,
    pub malay_human: String,
    /// Baseline system's Malay rendering of `eng_human`.
    pub malay_baseline: String,
    /// Baseline system's English rendering of `malay_human`.
    pub eng_baseline: String,
}

impl EmailRecord {
    pub fn new(
        eng_human: impl Into<String>,
        malay_human: impl Into<String>,
        malay_baseline: impl Into<String>,
        eng_baseline: impl Into<String>,
    ) -> Self {
        EmailRecord {
            eng_human: eng_human.into(),
            malay_human: malay_human.into(),
            malay_baseline: malay_baseline.into(),
            eng_baseline: eng_baseline.into(),
        }
    }

    fn fields(&self) -> [&str; 4] {
        [
            &self.eng_human,
            &self.malay_human,
            &self.malay_baseline,
            &self.eng_baseline,
        ]
    }
}

/// Translation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    MalayToEnglish,
    EnglishToMalay,
}

impl Direction {
    pub fn source<'a>(&self, record: &'a EmailRecord) -> &'a str {
        match self {
            Direction::MalayToEnglish => &record.malay_human,
            Direction::EnglishToMalay => &record.eng_human,
        }
    }

    /// Human reference translation.
    pub fn target<'a>(&self, record: &'a EmailRecord) -> &'a str {
        match self {
            Direction::MalayToEnglish => &record.eng_human,
            Direction::EnglishToMalay => &record.malay_human,
        }
    }

    /// Baseline system output for the same source.
    pub fn baseline<'a>(&self, record: &'a EmailRecord) -> &'a str {
        match self {
            Direction::MalayToEnglish => &record.eng_baseline,
            Direction::EnglishToMalay => &record.malay_baseline,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Direction::MalayToEnglish => "m2e",
            Direction::EnglishToMalay => "e2m",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m2e" | "malay_to_english" => Ok(Direction::MalayToEnglish),
            "e2m" | "english_to_malay" => Ok(Direction::EnglishToMalay),
            other => Err(Error::contract(format!("unknown direction `{other}` (expected m2e or e2m)"))),
        }
    }
}

/// Delimiter settings for the corpus file. Fields containing the delimiter or
/// newlines are double-quoted.
#[derive(Debug, Clone, Copy)]
pub struct CorpusFormat {
    pub delimiter: u8,
}

impl Default for CorpusFormat {
    fn default() -> Self {
        CorpusFormat { delimiter: b'\t' }
    }
}

pub fn load_email_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<EmailRecord>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_email_corpus(&text, format)
}

/// Parses corpus text. Row numbers in errors are 1-based and count the header.
pub fn parse_email_corpus(text: &str, format: CorpusFormat) -> Result<Vec<EmailRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_number = i + 1;
        let row = row.map_err(|e| Error::Parse {
            row: row_number,
            message: e.to_string(),
        })?;
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != 4 {
            return Err(Error::Parse {
                row: row_number,
                message: format!("expected 4 fields, found {}", row.len()),
            });
        }
        if i == 0 && is_header(&row) {
            continue;
        }
        let record = EmailRecord::new(&row[0], &row[1], &row[2], &row[3]);
        if let Some(col) = record.fields().iter().position(|f| f.trim().is_empty()) {
            return Err(Error::Parse {
                row: row_number,
                message: format!("field {} (`{}`) is empty", col + 1, HEADER[col]),
            });
        }
        records.push(record);
    }
    Ok(records)
}

fn is_header(row: &csv::StringRecord) -> bool {
    row.iter()
        .zip(HEADER)
        .all(|(field, name)| field.trim().eq_ignore_ascii_case(name))
}
