//! Splits a clustering into per-drone subproblems and matches depots to
//! clusters by centroid distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{geo_distance, GeoPoint, Instance};
use crate::qaoa::Partition;

#[derive(Debug, Error, PartialEq)]
pub enum AssignmentError {
    #[error("centroid of an empty point set")]
    EmptyCluster,
    #[error("partition covers {got} nodes, instance has {expected}")]
    PartitionSize { expected: usize, got: usize },
}

/// One drone's routing task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subproblem {
    /// Global indices of the visiting nodes, ascending.
    pub cluster: Vec<usize>,
    /// Global index of the start depot.
    pub depot: usize,
    /// Global indices of the charging stations the route may end at.
    pub charging: Vec<usize>,
    /// Whether the route returns to its depot.
    pub closed: bool,
}

/// Arithmetic mean of latitudes and longitudes.
pub fn centroid(points: &[GeoPoint]) -> Result<GeoPoint, AssignmentError> {
    if points.is_empty() {
        return Err(AssignmentError::EmptyCluster);
    }
    let n = points.len() as f64;
    let lat = points.iter().map(|p| p.lat()).sum::<f64>() / n;
    let lon = points.iter().map(|p| p.lon()).sum::<f64>() / n;
    // the mean of valid coordinates is a valid coordinate
    Ok(GeoPoint::new(lat, lon).expect("mean of valid coordinates"))
}

/// Which depot goes to which cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepotMatching {
    /// depot 0 -> cluster a, depot 1 -> cluster b (or the single depot for both)
    Identity,
    /// depot 0 -> cluster b, depot 1 -> cluster a
    Swapped,
}

/// Picks the matching with the smaller total depot-to-centroid distance;
/// ties keep the identity matching.
pub fn match_depots(depots: &[GeoPoint], centroid_a: GeoPoint, centroid_b: GeoPoint) -> DepotMatching {
    if depots.len() < 2 {
        return DepotMatching::Identity;
    }
    let identity = geo_distance(depots[0], centroid_a) + geo_distance(depots[1], centroid_b);
    let swapped = geo_distance(depots[0], centroid_b) + geo_distance(depots[1], centroid_a);
    if swapped < identity {
        DepotMatching::Swapped
    } else {
        DepotMatching::Identity
    }
}

/// Builds the two subproblems for `partition` (cluster a first).
pub fn assign_depots(
    partition: &Partition,
    inst: &Instance,
) -> Result<(Subproblem, Subproblem), AssignmentError> {
    let covered = partition.cluster_a.len() + partition.cluster_b.len();
    if covered != inst.n() {
        return Err(AssignmentError::PartitionSize {
            expected: inst.n(),
            got: covered,
        });
    }
    let pts = |c: &[usize]| c.iter().map(|&i| inst.location(i)).collect::<Vec<_>>();
    let ca = centroid(&pts(&partition.cluster_a))?;
    let cb = centroid(&pts(&partition.cluster_b))?;
    let (depot_a, depot_b) = if inst.depots().len() == 1 {
        (inst.depot_index(0), inst.depot_index(0))
    } else {
        match match_depots(inst.depots(), ca, cb) {
            DepotMatching::Identity => (inst.depot_index(0), inst.depot_index(1)),
            DepotMatching::Swapped => (inst.depot_index(1), inst.depot_index(0)),
        }
    };
    let charging: Vec<usize> = inst.charging_indices().collect();
    let closed = inst.use_case().closed_routes();
    let sub = |cluster: &[usize], depot| {
        let mut cluster = cluster.to_vec();
        cluster.sort_unstable();
        Subproblem {
            cluster,
            depot,
            charging: charging.clone(),
            closed,
        }
    };
    Ok((sub(&partition.cluster_a, depot_a), sub(&partition.cluster_b, depot_b)))
}
