//! Temporal precedence between condition pairs and the candidate set.
//!
//! Among patients who have developed both conditions by cross section 2, a
//! pair is counted "i first" when i was already present at cross section 1
//! while j was absent there, and symmetrically "j first". The ratio of these
//! counts decides precedence: i precedes j when the ratio exceeds the
//! precedence ratio `w`. Precedence implies neither causation nor
//! association, but a causal effect must follow the precedence direction.

use crate::cohort::{ConditionState, TransformedDataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecedenceCounts {
    /// Patients with i present and j absent at cross section 1.
    pub n_i_first: usize,
    /// Patients with j present and i absent at cross section 1.
    pub n_j_first: usize,
    /// Patients who developed both conditions by cross section 2.
    pub n_both_cs2: usize,
}

impl PrecedenceCounts {
    /// n_i_first / n_j_first, with 0/0 -> NaN and k/0 -> +inf for k > 0.
    pub fn ratio<F: Scalar>(&self) -> F {
        if self.n_j_first == 0 {
            if self.n_i_first == 0 {
                F::nan()
            } else {
                F::infinity()
            }
        } else {
            F::from_count(self.n_i_first) / F::from_count(self.n_j_first)
        }
    }

    pub fn swapped(&self) -> Self {
        PrecedenceCounts {
            n_i_first: self.n_j_first,
            n_j_first: self.n_i_first,
            n_both_cs2: self.n_both_cs2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecedenceDecision {
    IPrecedesJ,
    JPrecedesI,
    Neither,
}

/// Counts the precedence evidence for an ordered condition pair.
pub fn precedence_counts(
    data: &TransformedDataset,
    i: &str,
    j: &str,
) -> Result<PrecedenceCounts> {
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "precedence of `{i}` against itself is undefined"
        )));
    }
    let ci = data.condition_index(i)?;
    let cj = data.condition_index(j)?;
    let mut counts = PrecedenceCounts {
        n_i_first: 0,
        n_j_first: 0,
        n_both_cs2: 0,
    };
    for p in 0..data.n_patients() {
        if !(data.state2(p, ci).present() && data.state2(p, cj).present()) {
            continue;
        }
        counts.n_both_cs2 += 1;
        let i1 = data.state1(p, ci);
        let j1 = data.state1(p, cj);
        if i1.present() && j1 == ConditionState::Absent {
            counts.n_i_first += 1;
        }
        if j1.present() && i1 == ConditionState::Absent {
            counts.n_j_first += 1;
        }
    }
    Ok(counts)
}

/// Applies the precedence-ratio test to a pair of counts.
pub fn precedes<F: Scalar>(counts: &PrecedenceCounts, w: F) -> Result<PrecedenceDecision> {
    if !(w > F::zero()) {
        return Err(Error::InvalidArgument("precedence ratio w must be > 0".into()));
    }
    let forward: F = counts.ratio();
    let backward: F = counts.swapped().ratio();
    if forward > w {
        Ok(PrecedenceDecision::IPrecedesJ)
    } else if backward > w {
        Ok(PrecedenceDecision::JPrecedesI)
    } else {
        Ok(PrecedenceDecision::Neither)
    }
}

/// One ordered pair admitted to the candidate set.
#[derive(Debug, Clone)]
pub struct CandidatePair<F> {
    pub i: String,
    pub j: String,
    pub counts: PrecedenceCounts,
    pub ratio: F,
}

/// The candidate set: every ordered pair whose precedence ratio exceeds `w`
/// (and, when `alpha` is set, whose conditional proportions differ
/// significantly). With `w >= 1` at most one orientation of a pair can
/// qualify, so the set is antisymmetric by construction.
#[derive(Debug, Clone)]
pub struct CandidateSet<F> {
    pub w: F,
    pub alpha: Option<F>,
    pub pairs: Vec<CandidatePair<F>>,
}

impl<F: Scalar> CandidateSet<F> {
    pub fn contains(&self, i: &str, j: &str) -> bool {
        self.pairs.iter().any(|p| p.i == i && p.j == j)
    }

    pub fn get(&self, i: &str, j: &str) -> Option<&CandidatePair<F>> {
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }
}

/// Builds the candidate set over all distinct condition pairs.
///
/// `w < 1` is rejected: it would allow both orientations of a pair into the
/// set, voiding the acyclicity guarantee downstream.
pub fn build_candidate_set<F: Scalar>(
    data: &TransformedDataset,
    w: F,
    alpha: Option<F>,
) -> Result<CandidateSet<F>> {
    if !(w >= F::one()) {
        return Err(Error::InvalidArgument(
            "precedence ratio w must be >= 1".into(),
        ));
    }
    if let Some(a) = alpha {
        if !(a > F::zero() && a < F::one()) {
            return Err(Error::InvalidArgument(
                "significance level alpha must lie in (0, 1)".into(),
            ));
        }
    }
    let mut pairs: Vec<CandidatePair<F>> = Vec::new();
    let conds = data.conditions();
    for a in 0..conds.len() {
        for b in (a + 1)..conds.len() {
            let counts = precedence_counts(data, &conds[a], &conds[b])?;
            let decision = precedes(&counts, w)?;
            let (i, j, oriented) = match decision {
                PrecedenceDecision::IPrecedesJ => (&conds[a], &conds[b], counts),
                PrecedenceDecision::JPrecedesI => (&conds[b], &conds[a], counts.swapped()),
                PrecedenceDecision::Neither => continue,
            };
            if let Some(a) = alpha {
                let p = proportion_test_p_value(&oriented);
                if !(F::from_f64(p).unwrap() < a) {
                    continue;
                }
            }
            pairs.push(CandidatePair {
                i: i.clone(),
                j: j.clone(),
                counts: oriented,
                ratio: oriented.ratio(),
            });
        }
    }
    pairs.sort_by(|x, y| (&x.i, &x.j).cmp(&(&y.i, &y.j)));
    Ok(CandidateSet { w, alpha, pairs })
}

/// Two-sided two-proportion z-test p-value for the difference between the
/// "i first" and "j first" conditional proportions.
pub fn proportion_test_p_value(counts: &PrecedenceCounts) -> f64 {
    let n = counts.n_both_cs2 as f64;
    if counts.n_both_cs2 == 0 {
        return 1.0;
    }
    let p1 = counts.n_i_first as f64 / n;
    let p2 = counts.n_j_first as f64 / n;
    let pooled = (p1 + p2) / 2.0;
    let se = (2.0 * pooled * (1.0 - pooled) / n).sqrt();
    if se == 0.0 {
        return 1.0;
    }
    let z = (p1 - p2).abs() / se;
    2.0 * (1.0 - standard_normal_cdf(z))
}

/// Abramowitz & Stegun 7.1.26 rational approximation; absolute error < 1.5e-7.
fn standard_normal_cdf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x).exp();
    let erf = if x < 0.0 { -erf } else { erf };
    0.5 * (1.0 + erf)
}
