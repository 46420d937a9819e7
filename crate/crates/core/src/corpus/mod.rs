//! Corpus ingestion and encoding.
//!
//! The corpus is a 4-column delimiter-separated file: human English, human
//! Malay, baseline Malay, baseline English. Emails are split into contextual
//! paragraphs on blank lines, tokenized, and encoded against per-language
//! vocabularies into [`SentencePair`]s.

mod paragraph;
mod record;
mod tokenize;
mod vocab;
mod pair;

pub use pair::{encode_pair, read_pairs, write_pairs, SentencePair};
pub use paragraph::{split_contextual_paragraphs, split_record_paragraphs, AlignedParagraph, Paragraph};
pub use record::{load_email_corpus, parse_email_corpus, CorpusFormat, Direction, EmailRecord};
pub use tokenize::tokenize;
pub use vocab::{build_vocabulary, Vocabulary, EOS, EOS_TOKEN, RESERVED, SOS, SOS_TOKEN, UNK, UNK_TOKEN};
