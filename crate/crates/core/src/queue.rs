//! The evaluation queue.
//!
//! Pending trial points are kept in a plain vector that is re-sorted by the
//! configured ordering strategy before every dispatch burst. Ties always fall
//! back to insertion order, so the queue is deterministic for every strategy
//! (the random strategy consumes its own seeded generator).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::HashSet;

use crate::cache::Cache;
use crate::params::OrderingStrategy;
use crate::point::Point;
use crate::trial::TrialPoint;

pub struct EvalQueue {
    pending: Vec<(TrialPoint, u64)>,
    pending_points: HashSet<Point>,
    inserted: u64,
    strategy: OrderingStrategy,
    last_success_direction: Option<Vec<f64>>,
    shuffle_rng: ChaCha8Rng,
}

impl EvalQueue {
    pub fn new(strategy: OrderingStrategy, seed: u64) -> Self {
        EvalQueue {
            pending: Vec::new(),
            pending_points: HashSet::new(),
            inserted: 0,
            strategy,
            last_success_direction: None,
            shuffle_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x51ab_3e77_0c1d_9f24),
        }
    }

    /// Enqueues a trial point unless it is already pending or known to the
    /// cache. Returns whether the point was accepted.
    pub fn push(&mut self, trial: TrialPoint, cache: &Cache) -> bool {
        if self.pending_points.contains(&trial.point) || cache.contains(&trial.point) {
            return false;
        }
        self.pending_points.insert(trial.point.clone());
        self.pending.push((trial, self.inserted));
        self.inserted += 1;
        true
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn clear(&mut self) {
        self.pending.clear();
        self.pending_points.clear();
    }

    pub fn pop_front(&mut self) -> Option<TrialPoint> {
        if self.pending.is_empty() {
            return None;
        }
        let (trial, _) = self.pending.remove(0);
        self.pending_points.remove(&trial.point);
        Some(trial)
    }

    pub fn set_last_success_direction(&mut self, d: Vec<f64>) {
        self.last_success_direction = Some(d);
    }

    pub fn last_success_direction(&self) -> Option<&Vec<f64>> {
        self.last_success_direction.as_ref()
    }

    pub fn restore_last_success_direction(&mut self, d: Option<Vec<f64>>) {
        self.last_success_direction = d;
    }

    pub(crate) fn shuffle_rng_state(&self) -> ChaCha8Rng {
        self.shuffle_rng.clone()
    }

    pub(crate) fn restore_shuffle_rng(&mut self, rng: ChaCha8Rng) {
        self.shuffle_rng = rng;
    }

    /// Sorts the pending points for the next dispatch burst.
    pub fn sort_for_dispatch(&mut self) {
        match self.strategy {
            OrderingStrategy::GenerationOrder => {
                self.pending.sort_by_key(|(_, counter)| *counter);
            }
            OrderingStrategy::Lexicographic => {
                self.pending.sort_by(|(a, ca), (b, cb)| {
                    lex_cmp(&a.point, &b.point).then(ca.cmp(cb))
                });
            }
            OrderingStrategy::Random => {
                self.pending.sort_by_key(|(_, counter)| *counter);
                self.pending.shuffle(&mut self.shuffle_rng);
            }
            OrderingStrategy::LastSuccessDirection => {
                let reference = self.last_success_direction.clone();
                self.pending.sort_by(|(a, ca), (b, cb)| {
                    let sa = alignment(reference.as_deref(), a.direction.as_deref());
                    let sb = alignment(reference.as_deref(), b.direction.as_deref());
                    // Higher alignment first; ties by insertion order.
                    sb.partial_cmp(&sa)
                        .unwrap_or(Ordering::Equal)
                        .then(ca.cmp(cb))
                });
            }
        }
    }
}

fn lex_cmp(a: &Point, b: &Point) -> Ordering {
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.dim().cmp(&b.dim())
}

/// Cosine similarity between the last direction of success and a trial's
/// generating direction; points without a usable direction (or before any
/// success) rank last.
fn alignment(reference: Option<&[f64]>, direction: Option<&[f64]>) -> f64 {
    let (Some(r), Some(d)) = (reference, direction) else {
        return f64::NEG_INFINITY;
    };
    if r.len() != d.len() {
        return f64::NEG_INFINITY;
    }
    let dot: f64 = r.iter().zip(d).map(|(a, b)| a * b).sum();
    let nr = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nd = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nr == 0.0 || nd == 0.0 {
        return f64::NEG_INFINITY;
    }
    dot / (nr * nd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::Evaluation;
    use crate::trial::Generator;

    fn trial(coords: &[f64]) -> TrialPoint {
        TrialPoint::new(Point::new(coords.to_vec()), Generator::Poll)
            .with_direction(coords.to_vec())
    }

    fn drain(q: &mut EvalQueue) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        while let Some(t) = q.pop_front() {
            out.push(t.point.as_slice().to_vec());
        }
        out
    }

    #[test]
    fn push_rejects_duplicates_and_cached_points() {
        let cache = Cache::new();
        let mut q = EvalQueue::new(OrderingStrategy::GenerationOrder, 0);
        assert!(q.push(trial(&[1.0, 0.0]), &cache));
        assert!(!q.push(trial(&[1.0, 0.0]), &cache), "already pending");
        cache.fulfill(&Point::new(vec![2.0, 0.0]), Evaluation::ok(1.0, vec![]));
        assert!(!q.push(trial(&[2.0, 0.0]), &cache), "already in cache");
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn generation_order_is_fifo() {
        let cache = Cache::new();
        let mut q = EvalQueue::new(OrderingStrategy::GenerationOrder, 0);
        for x in [3.0, 1.0, 2.0] {
            q.push(trial(&[x]), &cache);
        }
        q.sort_for_dispatch();
        assert_eq!(drain(&mut q), vec![vec![3.0], vec![1.0], vec![2.0]]);
    }

    #[test]
    fn alignment_orders_by_cosine_to_last_success() {
        let cache = Cache::new();
        let mut q = EvalQueue::new(OrderingStrategy::LastSuccessDirection, 0);
        for d in [[-1.0, 0.0], [0.0, 1.0], [1.0, 0.1]] {
            q.push(trial(&d), &cache);
        }
        q.set_last_success_direction(vec![1.0, 0.0]);
        q.sort_for_dispatch();
        assert_eq!(
            drain(&mut q),
            vec![vec![1.0, 0.1], vec![0.0, 1.0], vec![-1.0, 0.0]]
        );
    }

    #[test]
    fn without_a_success_direction_insertion_order_stands() {
        let cache = Cache::new();
        let mut q = EvalQueue::new(OrderingStrategy::LastSuccessDirection, 0);
        for d in [[2.0, 0.0], [0.0, 2.0], [1.0, 1.0]] {
            q.push(trial(&d), &cache);
        }
        q.sort_for_dispatch();
        assert_eq!(
            drain(&mut q),
            vec![vec![2.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn lexicographic_compares_coordinates_in_order() {
        let cache = Cache::new();
        let mut q = EvalQueue::new(OrderingStrategy::Lexicographic, 0);
        q.push(trial(&[2.0, 0.0]), &cache);
        q.push(trial(&[1.0, 9.0]), &cache);
        q.sort_for_dispatch();
        assert_eq!(drain(&mut q), vec![vec![1.0, 9.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn random_order_is_reproducible_per_seed() {
        let order_with_seed = |seed: u64| {
            let cache = Cache::new();
            let mut q = EvalQueue::new(OrderingStrategy::Random, seed);
            for x in 0..12 {
                q.push(trial(&[x as f64]), &cache);
            }
            q.sort_for_dispatch();
            drain(&mut q)
        };
        assert_eq!(order_with_seed(7), order_with_seed(7));
        assert_ne!(order_with_seed(7), order_with_seed(8), "seeds differ");
    }
}
