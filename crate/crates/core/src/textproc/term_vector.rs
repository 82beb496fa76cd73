use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A bag of terms with their counts.
///
/// `total` always equals the sum of the counts and no stored count is zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTermVector", into = "RawTermVector")]
pub struct TermVector {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TermVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut v = Self::new();
        for t in tokens {
            v.add(t.as_ref(), 1);
        }
        v
    }

    /// Adds `count` occurrences of `term`. Adding zero is a no-op.
    pub fn add(&mut self, term: &str, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(term.to_string()).or_insert(0) += count;
        self.total += count;
    }

    pub fn merge(&mut self, other: &TermVector) {
        for (term, &count) in &other.counts {
            self.add(term, count);
        }
    }

    pub fn count(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Terms in lexicographic order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }
}

impl<'a> FromIterator<&'a str> for TermVector {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        let mut v = TermVector::new();
        for t in iter {
            v.add(t, 1);
        }
        v
    }
}

#[derive(Serialize, Deserialize)]
struct RawTermVector {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TryFrom<RawTermVector> for TermVector {
    type Error = String;

    fn try_from(raw: RawTermVector) -> Result<Self, Self::Error> {
        if raw.counts.values().any(|&c| c == 0) {
            return Err("term vector contains a zero count".into());
        }
        let sum: u64 = raw.counts.values().sum();
        if sum != raw.total {
            return Err(format!(
                "term vector total {} does not match count sum {sum}",
                raw.total
            ));
        }
        Ok(TermVector {
            counts: raw.counts,
            total: raw.total,
        })
    }
}

impl From<TermVector> for RawTermVector {
    fn from(v: TermVector) -> Self {
        RawTermVector {
            counts: v.counts,
            total: v.total,
        }
    }
}
