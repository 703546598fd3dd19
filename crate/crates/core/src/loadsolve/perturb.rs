use rand::Rng;

use super::{bottlenecks, BottleneckReport};
use crate::model::{AirtimeAllocation, Association, FrameConfig, RateMatrix};

/// Which branch of the neighbour generator fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    /// Uniform random move (keeps every association reachable).
    Random,
    /// Client moved from a bottlenecked AP to one with spare resources.
    Offload,
    /// Every AP is a bottleneck: client moved to an AP with a smaller `B_j`.
    Rebalance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub client: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    pub association: Association,
    pub kind: MoveKind,
    /// `None` when the selected branch had no legal move.
    pub moved: Option<Move>,
}

/// Generates a neighbour of `x` differing in at most one client.
///
/// With probability `p` a uniformly random client moves to a uniformly random
/// other AP it can reach. Otherwise bottlenecks are offloaded: if some AP has
/// `B_j < 0`, a random client of a bottlenecked AP moves to a random relieved
/// AP it can reach; if none does, a random client of a non-minimal AP moves
/// to a reachable AP with strictly smaller `B_j`. Candidates are restricted
/// to clients that have at least one legal target.
pub fn perturbate<R: Rng + ?Sized>(
    x: &Association,
    t: &AirtimeAllocation,
    rates: &RateMatrix,
    frames: &[FrameConfig],
    demand: &[f64],
    p: f64,
    rng: &mut R,
) -> Perturbation {
    let report = bottlenecks(x, t, rates, frames, demand);
    let y: f64 = rng.gen();
    let (kind, candidates) = if y < p {
        (MoveKind::Random, random_moves(x, rates))
    } else if !report.relieved().is_empty() {
        (MoveKind::Offload, offload_moves(x, rates, &report))
    } else {
        (MoveKind::Rebalance, rebalance_moves(x, rates, &report))
    };
    let mut association = x.clone();
    if candidates.is_empty() {
        log::debug!("perturbation branch {kind:?} has no legal move");
        return Perturbation { association, kind, moved: None };
    }
    let (client, targets) = &candidates[rng.gen_range(0..candidates.len())];
    let to = targets[rng.gen_range(0..targets.len())];
    let from = x.ap_of(*client);
    association.set(*client, to);
    Perturbation { association, kind, moved: Some(Move { client: *client, from, to }) }
}

type Candidates = Vec<(usize, Vec<usize>)>;

fn collect(x: &Association, rates: &RateMatrix, mut eligible: impl FnMut(usize, usize, usize) -> bool) -> Candidates {
    (0..x.n_clients())
        .filter_map(|i| {
            let from = x.ap_of(i);
            let targets: Vec<usize> =
                (0..rates.n_aps()).filter(|&j| j != from && rates.feasible(i, j) && eligible(i, from, j)).collect();
            (!targets.is_empty()).then_some((i, targets))
        })
        .collect()
}

fn random_moves(x: &Association, rates: &RateMatrix) -> Candidates {
    collect(x, rates, |_, _, _| true)
}

fn offload_moves(x: &Association, rates: &RateMatrix, b: &BottleneckReport) -> Candidates {
    collect(x, rates, |_, from, to| b.is_bottleneck(from) && !b.is_bottleneck(to))
}

fn rebalance_moves(x: &Association, rates: &RateMatrix, b: &BottleneckReport) -> Candidates {
    let min = b.value.iter().cloned().fold(f64::INFINITY, f64::min);
    collect(x, rates, |_, from, to| b.value[from] != min && b.value[to] < b.value[from])
}
