//! Euclidean TSP instances, tours, the length objective, synthetic dataset
//! generation, and the classical solvers used as baselines and oracles.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::{self, domain};

/// One node position inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        libm::sqrt(dx * dx + dy * dy)
    }
}

/// A TSP instance: `n ≥ 2` nodes, every coordinate in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    id: String,
    nodes: Vec<Point>,
}

impl Instance {
    pub fn new(id: String, nodes: Vec<Point>) -> Result<Self, TspError> {
        if nodes.len() < 2 {
            return Err(TspError::InvalidDimension { n: nodes.len() });
        }
        for (index, p) in nodes.iter().enumerate() {
            if !coordinate_ok(p.x) {
                return Err(TspError::CoordinateOutOfRange { index, value: p.x });
            }
            if !coordinate_ok(p.y) {
                return Err(TspError::CoordinateOutOfRange { index, value: p.y });
            }
        }
        Ok(Instance { id, nodes })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> Point {
        self.nodes[index]
    }
}

fn coordinate_ok(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

/// A visiting order over node indices. The return edge from the last node
/// back to the first is implicit.
///
/// Construction does not validate; call [`validate_tour`] or any operation
/// that takes an instance to check the permutation property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    pub fn from_order(order: Vec<usize>) -> Self {
        Tour { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Which half of a generated corpus an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn tag(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of equally sized instances produced from one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    pub split: Split,
    pub generator_seed: u64,
}

impl Dataset {
    /// Node count shared by every instance.
    pub fn n(&self) -> usize {
        self.instances.first().map_or(0, Instance::len)
    }
}

/// Why a tour fails validation against an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TourViolation {
    LengthMismatch { expected: usize, actual: usize },
    OutOfRange { position: usize, index: usize, n: usize },
    RepeatedIndex { position: usize, index: usize },
}

impl fmt::Display for TourViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TourViolation::LengthMismatch { expected, actual } => {
                write!(f, "tour has {actual} entries, instance has {expected} nodes")
            }
            TourViolation::OutOfRange { position, index, n } => {
                write!(f, "tour entry {index} at position {position} is out of range for n={n}")
            }
            TourViolation::RepeatedIndex { position, index } => {
                write!(f, "tour entry {index} at position {position} repeats an earlier node")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TspError {
    /// Fewer than two nodes requested or supplied.
    InvalidDimension { n: usize },
    CoordinateOutOfRange { index: usize, value: f64 },
    InvalidTour(TourViolation),
    StartOutOfRange { start: usize, n: usize },
    /// Exhaustive search refused above its size guard.
    TooLargeForExhaustive { n: usize, max: usize },
    EmptyDataset,
    MixedDimensions { expected: usize, found: usize },
}

impl fmt::Display for TspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TspError::InvalidDimension { n } => {
                write!(f, "an instance needs at least 2 nodes, got {n}")
            }
            TspError::CoordinateOutOfRange { index, value } => {
                write!(f, "node {index} has coordinate {value} outside [0, 1]")
            }
            TspError::InvalidTour(v) => write!(f, "invalid tour: {v}"),
            TspError::StartOutOfRange { start, n } => {
                write!(f, "start node {start} is out of range for n={n}")
            }
            TspError::TooLargeForExhaustive { n, max } => {
                write!(f, "exhaustive solver refuses n={n} (limit {max})")
            }
            TspError::EmptyDataset => write!(f, "dataset contains no instances"),
            TspError::MixedDimensions { expected, found } => {
                write!(f, "instance with n={found} in a dataset of n={expected}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TspError {}

impl From<TourViolation> for TspError {
    fn from(v: TourViolation) -> Self {
        TspError::InvalidTour(v)
    }
}

/// Draws `n` nodes i.i.d. uniform on the unit square. Pure in `(n, seed)`.
pub fn generate_instance(n: usize, seed: u64) -> Result<Instance, TspError> {
    if n < 2 {
        return Err(TspError::InvalidDimension { n });
    }
    let mut rng = rng::stream(&[domain::INSTANCE, seed]);
    let nodes = (0..n)
        .map(|_| {
            let x = rng::uniform01(&mut rng);
            let y = rng::uniform01(&mut rng);
            Point { x, y }
        })
        .collect();
    Ok(Instance { id: format!("{seed:016x}"), nodes })
}

/// Generates `count` instances of dimension `n`. Each instance gets its own
/// seed derived from `(seed, split, index)`, so generation can be sharded by
/// index and the train/test splits are disjoint even under one numeric seed.
pub fn generate_dataset(n: usize, count: usize, seed: u64, split: Split) -> Result<Dataset, TspError> {
    if count == 0 {
        return Err(TspError::EmptyDataset);
    }
    let mut instances = Vec::with_capacity(count);
    for index in 0..count {
        let mut inst = generate_instance(n, instance_seed(seed, split, index))?;
        inst.id = format!("{}-{index:06}", short_split(split));
        instances.push(inst);
    }
    Ok(Dataset { instances, split, generator_seed: seed })
}

/// The derived seed for instance `index` of a dataset.
pub fn instance_seed(dataset_seed: u64, split: Split, index: usize) -> u64 {
    rng::mix(&[domain::INSTANCE, dataset_seed, split.tag(), index as u64])
}

fn short_split(split: Split) -> &'static str {
    match split {
        Split::Train => "tr",
        Split::Test => "te",
    }
}

/// Checks that `tour` is a permutation of `0..n` for this instance.
pub fn validate_tour(instance: &Instance, tour: &Tour) -> Result<(), TourViolation> {
    let n = instance.len();
    if tour.len() != n {
        return Err(TourViolation::LengthMismatch { expected: n, actual: tour.len() });
    }
    let mut seen = alloc::vec![false; n];
    for (position, &index) in tour.order().iter().enumerate() {
        if index >= n {
            return Err(TourViolation::OutOfRange { position, index, n });
        }
        if seen[index] {
            return Err(TourViolation::RepeatedIndex { position, index });
        }
        seen[index] = true;
    }
    Ok(())
}

/// Closed-tour length: the sum of consecutive edge lengths plus the return
/// edge. Accumulated in double precision.
pub fn tour_length(instance: &Instance, tour: &Tour) -> Result<f64, TspError> {
    validate_tour(instance, tour)?;
    Ok(tour_length_unchecked(instance, tour.order()))
}

/// Length of a tour already known to be a valid permutation.
pub(crate) fn tour_length_unchecked(instance: &Instance, order: &[usize]) -> f64 {
    let n = order.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = instance.node(order[i]);
        let b = instance.node(order[(i + 1) % n]);
        total += a.distance(&b);
    }
    total
}

/// Greedy construction: from `start`, repeatedly visit the nearest unvisited
/// node, breaking distance ties by the lowest index.
pub fn nearest_neighbor_tour(instance: &Instance, start: usize) -> Result<Tour, TspError> {
    let n = instance.len();
    if start >= n {
        return Err(TspError::StartOutOfRange { start, n });
    }
    let mut visited = alloc::vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = start;
    visited[current] = true;
    order.push(current);
    for _ in 1..n {
        let here = instance.node(current);
        let mut best: Option<(usize, f64)> = None;
        for (candidate, seen) in visited.iter().enumerate() {
            if *seen {
                continue;
            }
            let d = here.distance(&instance.node(candidate));
            // strict < keeps the lowest index on ties
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((candidate, d));
            }
        }
        let (next, _) = best.expect("unvisited node must exist");
        visited[next] = true;
        order.push(next);
        current = next;
    }
    Ok(Tour::from_order(order))
}

/// Minimum improvement a 2-opt exchange must deliver to be applied. Guards
/// against cycling on floating-point noise.
const TWO_OPT_EPS: f64 = 1e-12;

/// First-improvement 2-opt local search.
///
/// One pass scans position pairs `i < j` in lexicographic order; each
/// improving exchange (reverse the segment between positions `i+1..=j`) is
/// applied immediately and the scan continues on the updated tour. Passes
/// repeat until a pass applies no move or `max_passes` passes complete.
pub fn two_opt(instance: &Instance, initial: &Tour, max_passes: usize) -> Result<Tour, TspError> {
    validate_tour(instance, initial)?;
    let n = instance.len();
    let mut order = initial.order().to_vec();
    if n < 4 {
        // with fewer than 4 nodes every exchange is degenerate
        return Ok(Tour::from_order(order));
    }
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                if i == 0 && j == n - 1 {
                    continue; // shares the wrap-around edge; degenerate
                }
                let a = instance.node(order[i]);
                let b = instance.node(order[i + 1]);
                let c = instance.node(order[j]);
                let d = instance.node(order[(j + 1) % n]);
                let delta = a.distance(&c) + b.distance(&d) - a.distance(&b) - c.distance(&d);
                if delta < -TWO_OPT_EPS {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(Tour::from_order(order))
}

/// Size guard for [`brute_force_optimal`].
pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Exact minimum-length tour by enumerating all `(n-1)!/2` canonical tours.
///
/// Canonical form: starts at node 0 and the second entry is smaller than the
/// last, which fixes rotation and orientation. Among equal-length optima the
/// lexicographically first canonical tour wins.
pub fn brute_force_optimal(instance: &Instance) -> Result<Tour, TspError> {
    let n = instance.len();
    if n > BRUTE_FORCE_MAX_N {
        return Err(TspError::TooLargeForExhaustive { n, max: BRUTE_FORCE_MAX_N });
    }
    if n == 2 {
        return Ok(Tour::from_order(alloc::vec![0, 1]));
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        // orientation canon: second element smaller than last
        if rest[0] < rest[n - 2] {
            order.clear();
            order.push(0);
            order.extend_from_slice(&rest);
            let length = tour_length_unchecked(instance, &order);
            if best.as_ref().map_or(true, |(bl, _)| length < *bl) {
                best = Some((length, order.clone()));
            }
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    let (_, order) = best.expect("n >= 3 enumerates at least one canonical tour");
    Ok(Tour::from_order(order))
}

/// Lexicographic successor in place; false once the sequence is the last one.
fn next_permutation(seq: &mut [usize]) -> bool {
    let n = seq.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}
