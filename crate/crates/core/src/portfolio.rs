//! Best-of-population inference.
//!
//! The final evolved population is kept whole: every policy decodes every
//! incoming instance and the shortest tour wins. The report also attributes
//! each instance to the policy that won it, which is how the value of the
//! non-best policies becomes visible.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::evolution::{SearchState, TaskPool};
use crate::ptrnet::{self, NetworkConfig, ParamVector, PtrNetError};
use crate::tsp::{tour_length_unchecked, Instance, Tour};

/// An ordered set of policies sharing one network shape. Policy ids are the
/// positions in `policies`.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    policies: Vec<ParamVector>,
    net: NetworkConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PortfolioError {
    Empty,
    /// Policy at this position does not match the config's parameter count.
    LayoutMismatch { policy: usize, expected: usize, actual: usize },
    Decode(PtrNetError),
}

impl fmt::Display for PortfolioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortfolioError::Empty => write!(f, "portfolio has no policies"),
            PortfolioError::LayoutMismatch { policy, expected, actual } => {
                write!(f, "policy {policy} has {actual} weights, config needs {expected}")
            }
            PortfolioError::Decode(e) => write!(f, "decode failed: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PortfolioError {}

impl From<PtrNetError> for PortfolioError {
    fn from(e: PtrNetError) -> Self {
        PortfolioError::Decode(e)
    }
}

impl Portfolio {
    pub fn new(policies: Vec<ParamVector>, net: NetworkConfig) -> Result<Self, PortfolioError> {
        if policies.is_empty() {
            return Err(PortfolioError::Empty);
        }
        let expected = ptrnet::param_count(&net);
        for (policy, p) in policies.iter().enumerate() {
            if p.len() != expected {
                return Err(PortfolioError::LayoutMismatch { policy, expected, actual: p.len() });
            }
        }
        Ok(Portfolio { policies, net })
    }

    /// A portfolio made of a final population, ids following population
    /// order.
    pub fn from_population(population: &[SearchState], net: NetworkConfig) -> Result<Self, PortfolioError> {
        Self::new(population.iter().map(|s| s.params.clone()).collect(), net)
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn net(&self) -> &NetworkConfig {
        &self.net
    }

    pub fn policies(&self) -> &[ParamVector] {
        &self.policies
    }
}

/// Outcome of decoding one instance with every policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub winner: usize,
    pub length: f64,
}

/// Aggregate over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioReport {
    /// Winner and winning length per instance, in dataset order.
    pub per_instance: Vec<InstanceResult>,
    /// Mean winning tour length.
    pub mean_length: f64,
    /// Mean length each policy achieves on its own over the whole dataset.
    pub member_means: Vec<f64>,
    /// Fraction of instances each policy wins; sums to one.
    pub contribution: Vec<f64>,
    /// Id of the member with the lowest own mean (ties to the lowest id).
    pub best_member: usize,
    /// Fraction of instances won by policies other than `best_member`.
    pub non_best_share: f64,
}

/// Greedy-decodes `instance` with every policy and returns the shortest tour
/// and its policy id; ties break toward the lower id.
pub fn infer_best(portfolio: &Portfolio, instance: &Instance) -> Result<(Tour, usize), PortfolioError> {
    let mut best: Option<(Tour, usize, f64)> = None;
    for (id, policy) in portfolio.policies.iter().enumerate() {
        let trace = ptrnet::forward_decode(instance, policy, &portfolio.net, 0)?;
        let length = tour_length_unchecked(instance, trace.tour.order());
        if best.as_ref().map_or(true, |(_, _, bl)| length < *bl) {
            best = Some((trace.tour, id, length));
        }
    }
    let (tour, id, _) = best.expect("portfolio is non-empty");
    Ok((tour, id))
}

/// Runs [`infer_best`] over a dataset and aggregates winner shares and means.
/// `(instance, policy)` decodes fan out over the pool; the aggregation is
/// order-independent by construction.
pub fn evaluate_portfolio<P: TaskPool>(
    portfolio: &Portfolio,
    instances: &[Instance],
    pool: &P,
) -> Result<PortfolioReport, PortfolioError> {
    if instances.is_empty() {
        return Err(PortfolioError::Empty);
    }
    let k = portfolio.len();
    // lengths[i * k + p] = length of policy p's tour on instance i
    let results: Vec<Result<f64, PortfolioError>> = pool.run(instances.len() * k, |task| {
        let (i, p) = (task / k, task % k);
        let trace = ptrnet::forward_decode(&instances[i], &portfolio.policies[p], &portfolio.net, 0)?;
        Ok(tour_length_unchecked(&instances[i], trace.tour.order()))
    });
    let mut lengths = Vec::with_capacity(results.len());
    for r in results {
        lengths.push(r?);
    }

    let mut per_instance = Vec::with_capacity(instances.len());
    let mut wins = vec![0usize; k];
    let mut member_totals = vec![0.0f64; k];
    let mut total = 0.0f64;
    for i in 0..instances.len() {
        let row = &lengths[i * k..(i + 1) * k];
        let mut winner = 0usize;
        for (p, &len) in row.iter().enumerate() {
            member_totals[p] += len;
            if len < row[winner] {
                winner = p;
            }
        }
        wins[winner] += 1;
        total += row[winner];
        per_instance.push(InstanceResult { winner, length: row[winner] });
    }

    let count = instances.len() as f64;
    let member_means: Vec<f64> = member_totals.iter().map(|t| t / count).collect();
    let contribution: Vec<f64> = wins.iter().map(|&w| w as f64 / count).collect();
    let mut best_member = 0usize;
    for (p, &m) in member_means.iter().enumerate() {
        if m < member_means[best_member] {
            best_member = p;
        }
    }
    let non_best_share = 1.0 - contribution[best_member];
    Ok(PortfolioReport {
        per_instance,
        mean_length: total / count,
        member_means,
        contribution,
        best_member,
        non_best_share,
    })
}
