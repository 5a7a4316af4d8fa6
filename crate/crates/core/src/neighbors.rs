//! Exhaustive k-nearest-neighbor search and class partition of a neighborhood.
//!
//! The neighborhood of a query is every training sample whose distance is at
//! most the k-th smallest distance, so samples tied at the radius are all
//! admitted and the neighborhood may hold more than `k` samples. That makes the
//! result independent of training-set row order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Euclidean distance between two vectors of equal length.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(distance(a, b))
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Row index in the training set.
    pub index: usize,
    pub distance: f64,
}

impl Neighbor {
    fn cmp_by_distance(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

/// Max-heap entry keyed on distance.
#[derive(PartialEq)]
struct HeapEntry(f64);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// The k-th smallest value of `distances` via a bounded max-heap.
fn kth_smallest(distances: &[f64], k: usize) -> f64 {
    let mut heap = BinaryHeap::with_capacity(k + 1);
    for &d in distances {
        if heap.len() < k {
            heap.push(HeapEntry(d));
        } else if d < heap.peek().map_or(f64::INFINITY, |e| e.0) {
            heap.pop();
            heap.push(HeapEntry(d));
        }
    }
    heap.peek().map_or(f64::INFINITY, |e| e.0)
}

/// A query's neighborhood, split by class.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodPartition {
    pub query: Vec<f64>,
    /// Neighbors of each class, ascending by distance. Indexed by class id;
    /// classes absent from the neighborhood have empty lists.
    pub per_class: Vec<Vec<Neighbor>>,
    pub k_requested: usize,
    /// Largest admitted distance, i.e. the k-th smallest distance.
    pub radius: f64,
}

impl NeighborhoodPartition {
    /// Number of neighbors of each class.
    pub fn counts(&self) -> Vec<usize> {
        self.per_class.iter().map(Vec::len).collect()
    }

    /// Total neighbor count, at least `k_requested`.
    pub fn total(&self) -> usize {
        self.per_class.iter().map(Vec::len).sum()
    }

    /// All neighbors with their class, ascending by distance then row index.
    pub fn sorted(&self) -> Vec<(usize, Neighbor)> {
        let mut all: Vec<(usize, Neighbor)> = self
            .per_class
            .iter()
            .enumerate()
            .flat_map(|(c, list)| list.iter().map(move |n| (c, *n)))
            .collect();
        all.sort_by(|a, b| a.1.cmp_by_distance(&b.1));
        all
    }

    /// Class of the single nearest neighbor (smallest distance, then lowest
    /// row index).
    pub fn nearest_class(&self) -> Option<usize> {
        self.per_class
            .iter()
            .enumerate()
            .filter_map(|(c, list)| list.first().map(|n| (c, n)))
            .min_by(|a, b| a.1.cmp_by_distance(b.1))
            .map(|(c, _)| c)
    }

    /// Feature vectors of the neighbors in class `class`.
    pub fn points<'a>(&self, train: &'a Dataset, class: usize) -> Vec<&'a [f64]> {
        self.per_class[class].iter().map(|n| train.row(n.index)).collect()
    }
}

fn check_query(train: &Dataset, query: &[f64]) -> Result<()> {
    if query.len() != train.n_dims() {
        return Err(Error::DimensionMismatch {
            expected: train.n_dims(),
            got: query.len(),
        });
    }
    Ok(())
}

/// Shared neighborhood of `query`: all training samples within the k-th
/// smallest distance, partitioned by class.
pub fn knn_partition(train: &Dataset, query: &[f64], k: usize) -> Result<NeighborhoodPartition> {
    check_query(train, query)?;
    if k == 0 || k > train.len() {
        return Err(Error::KOutOfRange {
            k,
            available: train.len(),
        });
    }
    let distances: Vec<f64> = train.rows().map(|row| distance(row, query)).collect();
    let radius = kth_smallest(&distances, k);
    let mut per_class = vec![Vec::new(); train.n_classes()];
    for (index, &d) in distances.iter().enumerate() {
        if d <= radius {
            per_class[train.label(index)].push(Neighbor { index, distance: d });
        }
    }
    for list in &mut per_class {
        list.sort_by(Neighbor::cmp_by_distance);
    }
    Ok(NeighborhoodPartition {
        query: query.to_vec(),
        per_class,
        k_requested: k,
        radius,
    })
}

/// Balanced neighborhood: the `k` nearest members of every class, each class
/// with its own radius-tie inclusion. `radius` is the largest admitted
/// distance over all classes.
pub fn knn_per_class(train: &Dataset, query: &[f64], k: usize) -> Result<NeighborhoodPartition> {
    check_query(train, query)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let members = train.class_members();
    if let Some((c, m)) = members.iter().enumerate().find(|(_, m)| m.len() < k) {
        return Err(Error::KExceedsClass {
            k,
            class: train.class_names()[c].clone(),
            size: m.len(),
        });
    }
    let mut per_class = Vec::with_capacity(members.len());
    let mut radius: f64 = 0.0;
    for idx in &members {
        let distances: Vec<f64> = idx.iter().map(|&i| distance(train.row(i), query)).collect();
        let class_radius = kth_smallest(&distances, k);
        radius = radius.max(class_radius);
        let mut list: Vec<Neighbor> = idx
            .iter()
            .zip(&distances)
            .filter(|(_, &d)| d <= class_radius)
            .map(|(&index, &distance)| Neighbor { index, distance })
            .collect();
        list.sort_by(Neighbor::cmp_by_distance);
        per_class.push(list);
    }
    Ok(NeighborhoodPartition {
        query: query.to_vec(),
        per_class,
        k_requested: k,
        radius,
    })
}

/// [`knn_partition`] over many queries in parallel; results are in query order
/// and identical to a sequential loop.
pub fn knn_partition_batch(
    train: &Dataset,
    queries: &[Vec<f64>],
    k: usize,
) -> Result<Vec<NeighborhoodPartition>> {
    queries
        .par_iter()
        .map(|q| knn_partition(train, q, k))
        .collect()
}
