//! Signed gradient-times-input token saliency.
//!
//! The raw score of position `t` is `-∇_{e(t)} L_ŷ · e(t)`, where `L_ŷ` is the
//! loss against the model's own prediction and `e(t)` is the input vector used
//! at `t`. Scores are divided by their L1 norm; signs are kept.

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::stats::dot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub position: usize,
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyMap {
    pub example_id: String,
    pub predicted_class: usize,
    /// One entry per position of the concatenated input, in order.
    pub scores: Vec<TokenScore>,
}

impl SaliencyMap {
    pub fn values(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.score).collect()
    }

    pub fn token_at(&self, position: usize) -> Option<&str> {
        self.scores.get(position).map(|s| s.token.as_str())
    }
}

pub fn saliency_map(params: &ModelParams, example: &Example) -> Result<SaliencyMap> {
    let eg = params.grad_wrt_embedding(example)?;
    let raw: Vec<f64> = eg
        .grads
        .iter()
        .zip(&eg.inputs)
        .map(|(g, e)| -dot(g, e))
        .collect();
    let total: f64 = raw.iter().map(|r| r.abs()).sum();
    let scores = example
        .tokens()
        .zip(&raw)
        .enumerate()
        .map(|(position, (token, &r))| TokenScore {
            position,
            token: token.to_string(),
            score: if total > 0.0 { r / total } else { 0.0 },
        })
        .collect();
    Ok(SaliencyMap {
        example_id: example.id.clone(),
        predicted_class: eg.predicted_class,
        scores,
    })
}

/// Positions of the most positive, most negative and median scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extremes {
    pub most_positive: usize,
    pub most_negative: usize,
    pub median: usize,
}

impl Extremes {
    /// `(name, position)` in a fixed order.
    pub fn named(&self) -> [(&'static str, usize); 3] {
        [
            ("most_positive", self.most_positive),
            ("most_negative", self.most_negative),
            ("median", self.median),
        ]
    }
}

/// Argmax, argmin and median positions. The median of an even count is the
/// lower central value; ties go to the lowest position.
pub fn extreme_tokens(map: &SaliencyMap) -> Result<Extremes> {
    let v = map.values();
    if v.is_empty() {
        return Err(Error::invalid("saliency map is empty"));
    }
    let first_with = |target: f64| v.iter().position(|&s| s == target).unwrap_or(0);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    Ok(Extremes {
        most_positive: first_with(max),
        most_negative: first_with(min),
        median: first_with(median),
    })
}

/// Deletes the token at `position` of the concatenated input. The id gets the
/// suffix `-rm<position>`.
pub fn remove_token(example: &Example, position: usize) -> Result<Example> {
    if position >= example.len() {
        return Err(Error::invalid(format!(
            "position {position} out of range for `{}` with {} tokens",
            example.id,
            example.len()
        )));
    }
    let mut out = example.clone();
    let na = out.tokens_a.len();
    let side = if position < na {
        out.tokens_a.remove(position);
        &out.tokens_a
    } else {
        let b = out
            .tokens_b
            .as_mut()
            .expect("position beyond first text implies a pair");
        b.remove(position - na);
        &*b
    };
    if side.is_empty() {
        return Err(Error::invalid(format!(
            "removing position {position} would leave `{}` with an empty text",
            example.id
        )));
    }
    out.id = format!("{}-rm{position}", example.id);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(scores: &[f64]) -> SaliencyMap {
        SaliencyMap {
            example_id: "m".into(),
            predicted_class: 0,
            scores: scores
                .iter()
                .enumerate()
                .map(|(i, &s)| TokenScore {
                    position: i,
                    token: format!("t{i}"),
                    score: s,
                })
                .collect(),
        }
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn extremes_follow_tie_and_median_rules() {
        let e = extreme_tokens(&map(&[0.5, -0.3, 0.2])).unwrap();
        assert_eq!((e.most_positive, e.most_negative, e.median), (0, 1, 2));
        let e = extreme_tokens(&map(&[0.25; 4])).unwrap();
        assert_eq!((e.most_positive, e.most_negative, e.median), (0, 0, 0));
        let e = extreme_tokens(&map(&[0.3, -0.1, -0.4, 0.2])).unwrap();
        assert_eq!(e.median, 1);
        assert!(extreme_tokens(&map(&[])).is_err());
    }

    #[test]
    fn removal_respects_sides() {
        let ex = Example::single("s", toks("a b c"), 0).unwrap();
        let r = remove_token(&ex, 1).unwrap();
        assert_eq!(r.tokens_a, toks("a c"));
        assert_eq!(r.id, "s-rm1");
        let one = Example::single("o", toks("a"), 0).unwrap();
        assert!(remove_token(&one, 0).is_err());

        let p = Example::pair("p", toks("x y"), toks("u v"), 1).unwrap();
        let r = remove_token(&p, 3).unwrap();
        assert_eq!(r.tokens_a, toks("x y"));
        assert_eq!(r.tokens_b.unwrap(), toks("u"));
        assert!(remove_token(&p, 4).is_err());
    }
}
