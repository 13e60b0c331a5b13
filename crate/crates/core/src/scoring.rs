//! Per-node logistic likelihoods and the edge-penalized BIC.
//!
//! Each condition's incidence at cross section 2 is regressed on indicators
//! of its parents' presence at cross section 1, over the patients at risk of
//! first incidence. The graph log-likelihood is the sum of the per-node
//! likelihoods; BIC = -2*loglik + ln(n_common)*edge_count, where n_common is
//! the number of patients under observation in both cross sections. The
//! penalty counts edges, not regression parameters; intercepts are free.

pub mod logistic;

use crate::cohort::{ConditionState, TransformedDataset};
use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::scalar::Scalar;
use logistic::{Design, FitResult, NewtonConfig};

/// Options shared by all node fits in a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    /// Include age and sex as always-present covariates (not penalized as
    /// edges). Age enters centered as (age - 50) / 10, sex as a male
    /// indicator; a patient missing either contributes zero to that column.
    pub demographic_covariates: bool,
}

/// A fitted per-node regression.
#[derive(Debug, Clone)]
pub struct NodeModel<F> {
    pub child: String,
    pub parents: Vec<String>,
    pub intercept: F,
    pub coefficients: Vec<F>,
    /// Achieved log-likelihood (natural log).
    pub loglik: F,
    /// Number of at-risk patients the fit used.
    pub n_fit: usize,
    /// True when any coefficient sits at the stabilization clamp.
    pub clamped: bool,
}

/// Graph score per the edge-penalized BIC.
#[derive(Debug, Clone)]
pub struct ScoreReport<F> {
    pub total_loglik: F,
    pub n_common: usize,
    pub n_edges: usize,
    pub bic: F,
    /// Conditions whose at-risk set was empty (contributed zero loglik).
    pub skipped: Vec<String>,
}

/// Builds the design matrix for a node fit: intercept, one indicator per
/// parent ("present at cross section 1"), optional demographic covariates.
/// Outcome: incident at cross section 2. Rows: the child's at-risk set.
fn node_design<F: Scalar>(
    data: &TransformedDataset,
    child: usize,
    parents: &[usize],
    opts: &FitOptions,
) -> Design<F> {
    let rows = at_risk_rows(data, child);
    let n_cov = if opts.demographic_covariates { 2 } else { 0 };
    let k = 1 + parents.len() + n_cov;
    let mut x = Vec::with_capacity(rows.len() * k);
    let mut y = Vec::with_capacity(rows.len());
    for &p in &rows {
        x.push(F::one());
        for &par in parents {
            x.push(if data.state1(p, par).present() {
                F::one()
            } else {
                F::zero()
            });
        }
        if opts.demographic_covariates {
            let d = data.demographics(p);
            let age = d.age.map(|a| (a - 50.0) / 10.0).unwrap_or(0.0);
            x.push(F::from_f64(age).unwrap());
            x.push(match d.sex {
                Some(crate::cohort::Sex::Male) => F::one(),
                _ => F::zero(),
            });
        }
        y.push(data.state2(p, child) == ConditionState::Incident);
    }
    Design { n: rows.len(), k, x, y }
}

fn at_risk_rows(data: &TransformedDataset, child: usize) -> Vec<usize> {
    (0..data.n_patients())
        .filter(|&p| {
            data.state1(p, child) == ConditionState::Absent
                && data.state2(p, child) != ConditionState::NotObserved
        })
        .collect()
}

/// Fits the logistic model for `child` given `parents`.
pub fn fit_logistic<F: Scalar>(
    data: &TransformedDataset,
    child: &str,
    parents: &[String],
) -> Result<NodeModel<F>> {
    fit_logistic_with(data, child, parents, &FitOptions::default())
}

pub fn fit_logistic_with<F: Scalar>(
    data: &TransformedDataset,
    child: &str,
    parents: &[String],
    opts: &FitOptions,
) -> Result<NodeModel<F>> {
    if parents.iter().any(|p| p == child) {
        return Err(Error::InvalidArgument(format!(
            "child `{child}` cannot be its own parent"
        )));
    }
    let c = data.condition_index(child)?;
    let parent_idx: Vec<usize> = parents
        .iter()
        .map(|p| data.condition_index(p))
        .collect::<Result<_>>()?;
    let design = node_design::<F>(data, c, &parent_idx, opts);
    if design.n == 0 {
        return Err(Error::EmptyAtRisk(child.to_string()));
    }
    let fit = logistic::fit(&design, &NewtonConfig::default());
    Ok(NodeModel {
        child: child.to_string(),
        parents: parents.to_vec(),
        intercept: fit.beta[0],
        coefficients: fit.beta[1..=parents.len()].to_vec(),
        loglik: fit.loglik,
        n_fit: design.n,
        clamped: fit.clamped,
    })
}

/// Per-node loglik used by the scores: `None` when the at-risk set is empty
/// (the node contributes zero and is flagged upstream).
fn node_loglik<F: Scalar>(
    data: &TransformedDataset,
    child: usize,
    parents: &[usize],
    opts: &FitOptions,
) -> Option<FitResult<F>> {
    let design = node_design::<F>(data, child, parents, opts);
    if design.n == 0 {
        return None;
    }
    Some(logistic::fit(&design, &NewtonConfig::default()))
}

/// Log-likelihood of the whole graph: the sum over all dataset conditions of
/// the node fit given that node's parents in the graph.
pub fn graph_loglik<F: Scalar>(
    data: &TransformedDataset,
    graph: &CausalGraph,
    opts: &FitOptions,
) -> Result<(F, Vec<String>)> {
    for n in graph.nodes() {
        data.condition_index(n)?;
    }
    let mut total = F::zero();
    let mut skipped = Vec::new();
    for (c, cond) in data.conditions().iter().enumerate() {
        let parents = graph_parents(data, graph, cond)?;
        match node_loglik::<F>(data, c, &parents, opts) {
            Some(fit) => total = total + fit.loglik,
            None => skipped.push(cond.clone()),
        }
    }
    Ok((total, skipped))
}

/// Parent indices (in dataset numbering) of `cond` per the graph; conditions
/// absent from the graph have no parents.
fn graph_parents(
    data: &TransformedDataset,
    graph: &CausalGraph,
    cond: &str,
) -> Result<Vec<usize>> {
    if !graph.contains_node(cond) {
        return Ok(Vec::new());
    }
    let v = graph.node_index(cond)?;
    let mut parents: Vec<usize> = graph
        .parents_of(v)
        .into_iter()
        .map(|p| data.condition_index(graph.node_id(p)))
        .collect::<Result<_>>()?;
    parents.sort_unstable();
    Ok(parents)
}

/// The BIC score report for a graph.
pub fn bic<F: Scalar>(
    data: &TransformedDataset,
    graph: &CausalGraph,
    opts: &FitOptions,
) -> Result<ScoreReport<F>> {
    if data.n_common() == 0 {
        return Err(Error::NoCommonObservations);
    }
    let (total, skipped) = graph_loglik::<F>(data, graph, opts)?;
    let n_edges = graph.n_edges();
    let two = F::from_f64(2.0).unwrap();
    let bic = -two * total + F::from_count(data.n_common()).ln() * F::from_count(n_edges);
    Ok(ScoreReport {
        total_loglik: total,
        n_common: data.n_common(),
        n_edges,
        bic,
        skipped,
    })
}

/// BIC(graph) - BIC(graph + edge), refitting only the child's node model.
/// Positive when adding the edge improves (lowers) the BIC.
///
/// A child with an empty at-risk set contributes zero likelihood either way,
/// so the delta reduces to the edge penalty.
pub fn delta_bic<F: Scalar>(
    data: &TransformedDataset,
    graph: &CausalGraph,
    edge: (&str, &str),
    opts: &FitOptions,
) -> Result<F> {
    if data.n_common() == 0 {
        return Err(Error::NoCommonObservations);
    }
    let (parent, child) = edge;
    let p = data.condition_index(parent)?;
    let c = data.condition_index(child)?;
    if p == c {
        return Err(Error::InvalidArgument("self edge".into()));
    }
    let current = graph_parents(data, graph, child)?;
    if current.contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "edge `{parent}` -> `{child}` already in graph"
        )));
    }
    let mut extended = current.clone();
    extended.push(p);
    extended.sort_unstable();
    let penalty = F::from_count(data.n_common()).ln();
    let old = node_loglik::<F>(data, c, &current, opts);
    let new = node_loglik::<F>(data, c, &extended, opts);
    let two = F::from_f64(2.0).unwrap();
    match (old, new) {
        (Some(o), Some(n)) => Ok(two * (n.loglik - o.loglik) - penalty),
        (None, None) => Ok(-penalty),
        _ => unreachable!("at-risk set does not depend on the parent set"),
    }
}
