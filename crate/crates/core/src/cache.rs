//! The evaluation cache.
//!
//! Every blackbox invocation — successful or failed — is recorded against the
//! exact coordinates of its point, and entries are never removed during a
//! run. Exact (bitwise) coordinate equality defines identity: two points that
//! differ in the last ulp are different cache entries, which is precisely
//! what reproducible restarts need.
//!
//! The cache also arbitrates between concurrent evaluators: a point is
//! *claimed* before evaluation, so two lanes racing to evaluate the same
//! point resolve to a single blackbox call.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::evaluation::Evaluation;
use crate::point::Point;

#[derive(Clone, Debug)]
enum Slot {
    /// Claimed by an evaluator; the result is on its way.
    Pending,
    Done(Evaluation),
}

/// Outcome of [`Cache::claim`].
#[derive(Clone, Debug)]
pub enum Claim {
    /// The point is new and now claimed by the caller: evaluate it.
    Fresh,
    /// Another evaluator is working on this point right now.
    InFlight,
    /// Already evaluated.
    Known(Evaluation),
}

#[derive(Default)]
struct CacheInner {
    map: HashMap<Point, Slot>,
    /// Points in fulfillment order; drives deterministic persistence.
    order: Vec<Point>,
}

/// Thread-safe map from points to their evaluations.
#[derive(Default)]
pub struct Cache {
    inner: Mutex<CacheInner>,
}

impl Cache {
    pub fn new() -> Self {
        Cache::default()
    }

    /// The completed evaluation of `x`, if any.
    pub fn lookup(&self, x: &Point) -> Option<Evaluation> {
        let inner = self.inner.lock().unwrap();
        match inner.map.get(x) {
            Some(Slot::Done(e)) => Some(e.clone()),
            _ => None,
        }
    }

    /// Is `x` known to the cache, either completed or in flight?
    pub fn contains(&self, x: &Point) -> bool {
        self.inner.lock().unwrap().map.contains_key(x)
    }

    /// Atomically claims `x` for evaluation.
    pub fn claim(&self, x: &Point) -> Claim {
        let mut inner = self.inner.lock().unwrap();
        match inner.map.get(x) {
            Some(Slot::Done(e)) => Claim::Known(e.clone()),
            Some(Slot::Pending) => Claim::InFlight,
            None => {
                inner.map.insert(x.clone(), Slot::Pending);
                Claim::Fresh
            }
        }
    }

    /// Releases a claim without recording a result (e.g. the evaluation was
    /// cut by a budget check after the claim).
    pub fn unclaim(&self, x: &Point) {
        let mut inner = self.inner.lock().unwrap();
        if matches!(inner.map.get(x), Some(Slot::Pending)) {
            inner.map.remove(x);
        }
    }

    /// Records the evaluation of `x`. The first writer wins; a duplicate
    /// insert is ignored and reported as `false`.
    pub fn fulfill(&self, x: &Point, eval: Evaluation) -> bool {
        let mut inner = self.inner.lock().unwrap();
        match inner.map.get(x) {
            Some(Slot::Done(_)) => false,
            _ => {
                inner.map.insert(x.clone(), Slot::Done(eval));
                inner.order.push(x.clone());
                true
            }
        }
    }

    /// Number of completed evaluations.
    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All completed entries in fulfillment order.
    pub fn snapshot(&self) -> Vec<(Point, Evaluation)> {
        let inner = self.inner.lock().unwrap();
        inner
            .order
            .iter()
            .map(|p| match &inner.map[p] {
                Slot::Done(e) => (p.clone(), e.clone()),
                Slot::Pending => unreachable!("ordered entries are always done"),
            })
            .collect()
    }

    /// Bulk-load completed evaluations (warm restart). Existing entries win.
    pub fn preload(&self, entries: impl IntoIterator<Item = (Point, Evaluation)>) {
        for (p, e) in entries {
            self.fulfill(&p, e);
        }
    }
}
