use std::collections::HashSet;

use rand::Rng;

use super::AttackError;

/// Ordered, duplicate-free candidate passwords.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dictionary {
    entries: Vec<Vec<u8>>,
}

impl Dictionary {
    pub fn new(entries: Vec<Vec<u8>>) -> Result<Self, AttackError> {
        if entries.is_empty() {
            return Err(AttackError::EmptyDictionary);
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.is_empty() {
                return Err(AttackError::EmptyEntry(i + 1));
            }
            if !seen.insert(e.as_slice()) {
                return Err(AttackError::DuplicateEntry(i + 1));
            }
        }
        Ok(Dictionary { entries })
    }

    /// One password per LF-terminated line, bytes kept verbatim. A missing
    /// final LF is tolerated.
    pub fn parse(text: &[u8]) -> Result<Self, AttackError> {
        let body = text.strip_suffix(b"\n").unwrap_or(text);
        if body.is_empty() {
            return Err(AttackError::EmptyDictionary);
        }
        Dictionary::new(body.split(|&b| b == b'\n').map(<[u8]>::to_vec).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        write_lines(self.entries.iter().map(Vec::as_slice))
    }

    /// `n` distinct random lowercase-alphanumeric passwords of 8 to 16
    /// characters.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
        let mut seen = HashSet::with_capacity(n);
        let mut entries = Vec::with_capacity(n);
        while entries.len() < n {
            let len = rng.random_range(8..=16);
            let pw: Vec<u8> = (0..len)
                .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
                .collect();
            if seen.insert(pw.clone()) {
                entries.push(pw);
            }
        }
        Dictionary { entries }
    }

    /// Inserts `password` at a random position unless already present.
    pub fn plant(&mut self, password: &[u8], rng: &mut impl Rng) {
        if !self.contains(password) {
            let at = rng.random_range(0..=self.entries.len());
            self.entries.insert(at, password.to_vec());
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Vec<u8>] {
        &self.entries
    }

    pub fn contains(&self, password: &[u8]) -> bool {
        self.entries.iter().any(|e| e == password)
    }
}

/// Serializes passwords in the dictionary file format.
pub fn write_lines<'a>(lines: impl IntoIterator<Item = &'a [u8]>) -> Vec<u8> {
    let mut out = Vec::new();
    for l in lines {
        out.extend_from_slice(l);
        out.push(b'\n');
    }
    out
}
