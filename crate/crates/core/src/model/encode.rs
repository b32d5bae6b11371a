use crate::corpus::{Example, Vocabulary};

/// An example mapped to vocabulary ids, ready for the numeric kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub ids_a: Vec<u32>,
    pub ids_b: Option<Vec<u32>>,
    /// Sparse bag-of-words over the concatenated stream, unknown id dropped,
    /// sorted by id.
    pub counts: Vec<(u32, f64)>,
    pub label: usize,
}

impl Encoded {
    pub fn new(example: &Example, vocab: &Vocabulary) -> Self {
        let ids_a = vocab.encode(example.tokens_a.iter().map(String::as_str));
        let ids_b = example
            .tokens_b
            .as_ref()
            .map(|b| vocab.encode(b.iter().map(String::as_str)));
        let mut all: Vec<u32> = ids_a
            .iter()
            .chain(ids_b.iter().flatten())
            .copied()
            .filter(|&id| id != 0)
            .collect();
        all.sort_unstable();
        let mut counts: Vec<(u32, f64)> = Vec::new();
        for id in all {
            match counts.last_mut() {
                Some((last, c)) if *last == id => *c += 1.0,
                _ => counts.push((id, 1.0)),
            }
        }
        Encoded {
            ids_a,
            ids_b,
            counts,
            label: example.label,
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = u32> + '_ {
        self.ids_a
            .iter()
            .chain(self.ids_b.iter().flatten())
            .copied()
    }

    pub fn num_positions(&self) -> usize {
        self.ids_a.len() + self.ids_b.as_ref().map_or(0, Vec::len)
    }

    /// Count of `id` in the concatenated stream.
    pub fn count_of(&self, id: u32) -> f64 {
        self.counts
            .binary_search_by_key(&id, |&(i, _)| i)
            .map_or(0.0, |k| self.counts[k].1)
    }
}
