//! Corpus ingestion: whitespace tokenization, vocabulary construction, and
//! sliding-window (context, next-token) example generation.
//!
//! Text arrives as UTF-8 with one sentence per line. The vocabulary assigns
//! dense ids in first-occurrence order over the training split and always
//! contains the unknown-word and end-of-sentence markers. Lines with no
//! tokens are skipped.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Marker token for out-of-vocabulary words.
pub const UNK_TOKEN: &str = "<unk>";
/// Marker token appended at the end of each encoded line.
pub const EOS_TOKEN: &str = "<eos>";

/// Bijective token/id map with dense ids from 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    unk_id: usize,
    eos_id: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from training text: whitespace tokens in
    /// first-occurrence order, with the unknown and end-of-sentence markers
    /// appended if the text did not already contain them.
    pub fn build(train_text: &str) -> Result<Self> {
        let mut tokens: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for word in train_text.split_whitespace() {
            if !index.contains_key(word) {
                index.insert(word.to_string(), tokens.len());
                tokens.push(word.to_string());
            }
        }
        if tokens.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for marker in [UNK_TOKEN, EOS_TOKEN] {
            if !index.contains_key(marker) {
                index.insert(marker.to_string(), tokens.len());
                tokens.push(marker.to_string());
            }
        }
        let unk_id = index[UNK_TOKEN];
        let eos_id = index[EOS_TOKEN];
        Ok(Self {
            tokens,
            index,
            unk_id,
            eos_id,
        })
    }

    /// Restores a vocabulary from its export format (one token per line in
    /// id order).
    pub fn from_export(text: &str) -> Result<Self> {
        let mut tokens: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for line in text.lines() {
            let token = line.trim();
            if token.is_empty() {
                continue;
            }
            if index.insert(token.to_string(), tokens.len()).is_some() {
                return Err(Error::VocabMismatch(format!(
                    "duplicate token {token:?} in vocabulary file"
                )));
            }
            tokens.push(token.to_string());
        }
        let unk_id = *index.get(UNK_TOKEN).ok_or_else(|| {
            Error::VocabMismatch(format!("vocabulary file is missing {UNK_TOKEN}"))
        })?;
        let eos_id = *index.get(EOS_TOKEN).ok_or_else(|| {
            Error::VocabMismatch(format!("vocabulary file is missing {EOS_TOKEN}"))
        })?;
        Ok(Self {
            tokens,
            index,
            unk_id,
            eos_id,
        })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn unk_id(&self) -> usize {
        self.unk_id
    }

    pub fn eos_id(&self) -> usize {
        self.eos_id
    }

    /// Token string for an id.
    pub fn token(&self, id: usize) -> Result<&str> {
        self.tokens
            .get(id)
            .map(String::as_str)
            .ok_or(Error::TokenOutOfRange {
                id,
                vocab_size: self.tokens.len(),
            })
    }

    /// Id for a token string, if in vocabulary.
    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Encodes text line by line: each word maps to its id (unknown words to
    /// the unknown marker), then, when `append_eos` is set, the
    /// end-of-sentence id closes the line. Lines are concatenated.
    pub fn encode(&self, text: &str, split: Split, append_eos: bool) -> TokenStream {
        let mut ids = Vec::new();
        for line in text.lines() {
            let mut saw_token = false;
            for word in line.split_whitespace() {
                saw_token = true;
                ids.push(self.id(word).unwrap_or(self.unk_id));
            }
            if saw_token && append_eos {
                ids.push(self.eos_id);
            }
        }
        TokenStream { split, ids }
    }

    /// Maps ids back to token strings.
    pub fn decode(&self, ids: &[usize]) -> Result<Vec<&str>> {
        ids.iter().map(|id| self.token(*id)).collect()
    }

    /// Export format: one token per line in id order.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for token in &self.tokens {
            out.push_str(token);
            out.push('\n');
        }
        out
    }
}

/// Which corpus split a token stream came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// A tokenized corpus split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenStream {
    pub split: Split,
    ids: Vec<usize>,
}

impl TokenStream {
    /// Wraps raw ids, checking each against the vocabulary size.
    pub fn new(split: Split, ids: Vec<usize>, vocab_size: usize) -> Result<Self> {
        for id in &ids {
            if *id >= vocab_size {
                return Err(Error::TokenOutOfRange {
                    id: *id,
                    vocab_size,
                });
            }
        }
        Ok(Self { split, ids })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Iterates (context, target) windows: for each start `s` stepping by
    /// `stride` with `s + n < len`, the context is `ids[s..s+n]` and the
    /// target is `ids[s+n]`. The stream must be longer than the window.
    pub fn windows(&self, window: usize, stride: usize) -> Result<WindowIter<'_>> {
        if window == 0 || stride == 0 {
            return Err(Error::InvalidArgument(
                "window and stride must be positive".into(),
            ));
        }
        if self.ids.len() <= window {
            return Err(Error::StreamTooShort {
                len: self.ids.len(),
                window,
            });
        }
        Ok(WindowIter {
            ids: &self.ids,
            window,
            stride,
            start: 0,
        })
    }
}

/// Number of windows of a given stream length: floor((len - n - 1)/stride) + 1.
pub fn window_count(len: usize, window: usize, stride: usize) -> usize {
    if len <= window || stride == 0 {
        return 0;
    }
    (len - window - 1) / stride + 1
}

/// Iterator over (context, target) pairs of a stream.
pub struct WindowIter<'a> {
    ids: &'a [usize],
    window: usize,
    stride: usize,
    start: usize,
}

impl<'a> Iterator for WindowIter<'a> {
    type Item = (&'a [usize], usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.start + self.window >= self.ids.len() {
            return None;
        }
        let context = &self.ids[self.start..self.start + self.window];
        let target = self.ids[self.start + self.window];
        self.start += self.stride;
        Some((context, target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_uses_first_occurrence_order_and_appends_markers() {
        let vocab = Vocabulary::build("a b a").unwrap();
        assert_eq!(vocab.size(), 4);
        assert_eq!(vocab.id("a"), Some(0));
        assert_eq!(vocab.id("b"), Some(1));
        assert_eq!(vocab.unk_id(), 2);
        assert_eq!(vocab.eos_id(), 3);
    }

    #[test]
    fn literal_unknown_marker_is_not_duplicated() {
        let vocab = Vocabulary::build("x <unk> y").unwrap();
        assert_eq!(vocab.size(), 4); // x, <unk>, y, <eos>
        assert_eq!(vocab.unk_id(), 1);
        let stream = vocab.encode("<unk> q", Split::Train, false);
        assert_eq!(stream.ids(), &[vocab.unk_id(), vocab.unk_id()]);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(matches!(Vocabulary::build("  \n \t "), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn encode_appends_eos_per_line_and_maps_oov_to_unk() {
        let vocab = Vocabulary::build("a b a").unwrap();
        let stream = vocab.encode("a b", Split::Train, true);
        assert_eq!(stream.ids(), &[0, 1, vocab.eos_id()]);
        let oov = vocab.encode("a zzz", Split::Valid, true);
        assert_eq!(oov.ids(), &[0, vocab.unk_id(), vocab.eos_id()]);
        let two_lines = vocab.encode("a\nb b", Split::Test, true);
        assert_eq!(
            two_lines.ids(),
            &[0, vocab.eos_id(), 1, 1, vocab.eos_id()]
        );
    }

    #[test]
    fn decode_round_trips_in_vocab_text() {
        let vocab = Vocabulary::build("the cat sat").unwrap();
        let stream = vocab.encode("cat sat the", Split::Train, false);
        let words = vocab.decode(stream.ids()).unwrap();
        assert_eq!(words, vec!["cat", "sat", "the"]);
    }

    #[test]
    fn export_round_trips_through_parser() {
        let vocab = Vocabulary::build("alpha beta gamma").unwrap();
        let restored = Vocabulary::from_export(&vocab.export()).unwrap();
        assert_eq!(vocab, restored);
    }

    #[test]
    fn export_parser_rejects_missing_markers_and_duplicates() {
        assert!(matches!(
            Vocabulary::from_export("a\nb\n"),
            Err(Error::VocabMismatch(_))
        ));
        assert!(matches!(
            Vocabulary::from_export("a\na\n<unk>\n<eos>\n"),
            Err(Error::VocabMismatch(_))
        ));
    }

    #[test]
    fn token_stream_validates_ids() {
        assert!(TokenStream::new(Split::Train, vec![0, 1, 2], 3).is_ok());
        assert!(matches!(
            TokenStream::new(Split::Train, vec![0, 3], 3),
            Err(Error::TokenOutOfRange { id: 3, .. })
        ));
    }

    #[test]
    fn windows_enumerate_contexts_and_targets() {
        let stream = TokenStream::new(Split::Train, vec![10, 11, 12, 13, 14], 20).unwrap();
        let got: Vec<(Vec<usize>, usize)> = stream
            .windows(2, 1)
            .unwrap()
            .map(|(c, t)| (c.to_vec(), t))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![10, 11], 12),
                (vec![11, 12], 13),
                (vec![12, 13], 14),
            ]
        );
    }

    #[test]
    fn stream_of_window_plus_one_has_exactly_one_window() {
        let stream = TokenStream::new(Split::Valid, vec![1, 2, 3], 4).unwrap();
        let got: Vec<_> = stream.windows(2, 1).unwrap().collect();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0], (&[1usize, 2][..], 3));
    }

    #[test]
    fn window_count_formula_matches_enumeration() {
        for len in 1..40usize {
            let ids: Vec<usize> = (0..len).collect();
            let stream = TokenStream::new(Split::Train, ids, len.max(1)).unwrap();
            for window in 1..8usize {
                for stride in 1..5usize {
                    let expected = window_count(len, window, stride);
                    let actual = stream
                        .windows(window, stride)
                        .map(|it| it.count())
                        .unwrap_or(0);
                    assert_eq!(expected, actual, "len={len} n={window} stride={stride}");
                }
            }
        }
    }

    #[test]
    fn too_short_stream_is_rejected() {
        let stream = TokenStream::new(Split::Test, vec![0, 1], 2).unwrap();
        assert!(matches!(
            stream.windows(2, 1),
            Err(Error::StreamTooShort { len: 2, window: 2 })
        ));
    }
}
