//! Fractional credit of co-authors.
//!
//! In alphabetical-order fields every author gets `1/n`. In fields where the
//! byline order signals contribution, the first and last authors carry the
//! most weight:
//!
//! * intramural (first and last author share an institution): first and
//!   last get `intramural_end` each (0.40), the rest is split evenly over the
//!   middle authors;
//! * extramural: first and last get `extramural_end` (0.30), second and
//!   second-to-last get `extramural_inner` (0.15), the rest is split evenly
//!   over the remaining authors.
//!
//! Short bylines collapse roles onto the same author; a position accumulates
//! every role it holds. Any share left without a recipient is redistributed
//! by rescaling the vector to sum to one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Authorship, Convention, FieldTaxonomy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PositionWeights {
    pub intramural_end: f64,
    pub extramural_end: f64,
    pub extramural_inner: f64,
}

impl Default for PositionWeights {
    fn default() -> Self {
        PositionWeights {
            intramural_end: 0.40,
            extramural_end: 0.30,
            extramural_inner: 0.15,
        }
    }
}

impl PositionWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.intramural_end, self.extramural_end, self.extramural_inner];
        if all.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidParameter(format!(
                "byline weights must lie in [0, 1]: {self:?}"
            )));
        }
        if self.intramural_end <= 0.0 || self.extramural_end <= 0.0 {
            return Err(Error::InvalidParameter(
                "first/last author weights must be positive".into(),
            ));
        }
        if 2.0 * self.intramural_end > 1.0
            || 2.0 * (self.extramural_end + self.extramural_inner) > 1.0
        {
            return Err(Error::InvalidParameter(format!(
                "byline weights exceed a total of 1: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightingScheme {
    pub kind: Convention,
    pub weights: PositionWeights,
}

impl WeightingScheme {
    pub const fn alphabetical() -> Self {
        WeightingScheme {
            kind: Convention::Alphabetical,
            weights: PositionWeights {
                intramural_end: 0.40,
                extramural_end: 0.30,
                extramural_inner: 0.15,
            },
        }
    }

    pub fn position_weighted(weights: PositionWeights) -> Self {
        WeightingScheme {
            kind: Convention::PositionWeighted,
            weights,
        }
    }
}

/// Credit of every byline position, in byline order. Sums to one.
pub fn credit_shares(byline: &[Authorship], scheme: &WeightingScheme) -> Vec<f64> {
    let n = byline.len();
    match (scheme.kind, n) {
        (_, 0) => Vec::new(),
        (_, 1) => vec![1.0],
        (Convention::Alphabetical, _) => vec![1.0 / n as f64; n],
        (Convention::PositionWeighted, _) => {
            let intramural = byline[0].institution_id == byline[n - 1].institution_id;
            position_shares(n, intramural, &scheme.weights)
        }
    }
}

fn position_shares(n: usize, intramural: bool, w: &PositionWeights) -> Vec<f64> {
    debug_assert!(n >= 2);
    let mut shares = vec![0.0; n];
    let (rest_share, rest) = if intramural {
        shares[0] += w.intramural_end;
        shares[n - 1] += w.intramural_end;
        (1.0 - 2.0 * w.intramural_end, 1..n - 1)
    } else {
        shares[0] += w.extramural_end;
        shares[n - 1] += w.extramural_end;
        shares[1] += w.extramural_inner;
        shares[n - 2] += w.extramural_inner;
        let rest = if n > 4 { 2..n - 2 } else { 0..0 };
        (1.0 - 2.0 * (w.extramural_end + w.extramural_inner), rest)
    };
    if rest.is_empty() {
        if rest_share > 0.0 {
            let total: f64 = shares.iter().sum();
            for s in &mut shares {
                *s /= total;
            }
        }
    } else {
        let each = rest_share / rest.len() as f64;
        for s in &mut shares[rest] {
            *s += each;
        }
    }
    shares
}

/// Credit of the author at `position` (1-based).
pub fn fractional_contribution(
    byline: &[Authorship],
    position: usize,
    scheme: &WeightingScheme,
) -> Result<f64> {
    if position == 0 || position > byline.len() {
        return Err(Error::PositionOutOfRange {
            position,
            len: byline.len(),
        });
    }
    Ok(credit_shares(byline, scheme)[position - 1])
}

/// Picks the weighting scheme for a researcher from the SDS convention in the
/// taxonomy and the configured weights (per-SDS overrides first).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CreditPolicy {
    #[serde(flatten)]
    pub default_weights: PositionWeights,
    pub per_sds: BTreeMap<String, PositionWeights>,
}

impl CreditPolicy {
    pub fn validate(&self) -> Result<()> {
        self.default_weights.validate()?;
        for (sds, w) in &self.per_sds {
            w.validate()
                .map_err(|e| Error::InvalidParameter(format!("SDS `{sds}`: {e}")))?;
        }
        Ok(())
    }

    pub fn scheme_for(&self, sds: &str, taxonomy: &FieldTaxonomy) -> WeightingScheme {
        let kind = taxonomy
            .get(sds)
            .map(|e| e.convention)
            .unwrap_or(Convention::Alphabetical);
        let weights = self.per_sds.get(sds).copied().unwrap_or(self.default_weights);
        WeightingScheme { kind, weights }
    }
}
