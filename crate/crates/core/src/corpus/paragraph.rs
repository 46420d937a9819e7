use log::warn;

use super::record::EmailRecord;

/// A tokenized contextual paragraph of one email.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub tokens: Vec<String>,
    pub source_email_id: usize,
    /// 0-based position within the email.
    pub paragraph_index: usize,
}

/// Splits text into paragraphs separated by one or more blank lines.
///
/// Lines inside a paragraph are kept with their newlines; leading and
/// trailing whitespace of each paragraph is trimmed. Whitespace-only input
/// yields no paragraphs.
pub fn split_contextual_paragraphs(email_text: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in email_text.lines() {
        if line.trim().is_empty() {
            flush(&mut current, &mut paragraphs);
        } else {
            current.push(line);
        }
    }
    flush(&mut current, &mut paragraphs);
    paragraphs
}

fn flush(lines: &mut Vec<&str>, out: &mut Vec<String>) {
    if lines.is_empty() {
        return;
    }
    let text = lines.join("\n");
    let text = text.trim();
    if !text.is_empty() {
        out.push(text.to_owned());
    }
    lines.clear();
}

/// One paragraph-aligned slice of an email: all four columns restricted to
/// the same paragraph position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedParagraph {
    pub email_id: usize,
    pub paragraph_index: usize,
    pub record: EmailRecord,
}

/// Splits every column of every record and zips paragraphs position-wise.
/// Emails whose columns disagree on paragraph count are dropped with a
/// warning.
pub fn split_record_paragraphs(records: &[EmailRecord]) -> Vec<AlignedParagraph> {
    let mut out = Vec::new();
    for (email_id, record) in records.iter().enumerate() {
        let cols = [
            split_contextual_paragraphs(&record.eng_human),
            split_contextual_paragraphs(&record.malay_human),
            split_contextual_paragraphs(&record.malay_baseline),
            split_contextual_paragraphs(&record.eng_baseline),
        ];
        let counts: Vec<usize> = cols.iter().map(Vec::len).collect();
        if counts.iter().any(|&c| c != counts[0]) {
            warn!("email {email_id}: paragraph counts differ across columns {counts:?}; excluded");
            continue;
        }
        for i in 0..counts[0] {
            out.push(AlignedParagraph {
                email_id,
                paragraph_index: i,
                record: EmailRecord::new(&cols[0][i], &cols[1][i], &cols[2][i], &cols[3][i]),
            });
        }
    }
    out
}
