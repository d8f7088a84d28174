//! Mega search-poll: generate everything, evaluate once.
//!
//! The sequential iteration runs each search as its own burst so an early
//! success can cancel the rest. That cadence wastes parallel capacity when
//! evaluations are slow: a burst of one or two points leaves most workers
//! idle. In mega mode the iteration generates *all* enabled search points
//! and the full poll set up front, then dispatches the union as a single
//! burst, trading a few extra evaluations for much better worker occupancy.

use std::collections::HashSet;

use crate::mads::{poll_trials, MadsState};
use crate::step::{Step, StepError};
use crate::trial::{Generator, TrialPoint};

/// Drops later trials that duplicate an earlier point exactly.
pub(crate) fn dedup_trials(mut trials: Vec<TrialPoint>) -> Vec<TrialPoint> {
    let mut seen = HashSet::new();
    trials.retain(|t| seen.insert(t.point.clone()));
    trials
}

/// All enabled search points followed by the poll set, deduplicated.
///
/// Generation order (and hence random-stream consumption) matches the
/// sequential iteration, so a run with mega mode toggled explores the same
/// candidate sets, just in bigger bites.
pub(crate) fn mega_points(state: &mut MadsState) -> Vec<TrialPoint> {
    let mut points = Vec::new();
    for generator in [
        Generator::Speculative,
        Generator::LatinHypercube,
        Generator::NelderMead,
        Generator::QuadModel,
    ] {
        if state.search_enabled(generator) {
            points.extend(state.search_trials(generator));
        }
    }
    points.extend(poll_trials(state));
    dedup_trials(points)
}

/// The single-burst iteration body used when mega mode is on.
pub(crate) struct MegaSearchPoll;

impl Step<MadsState> for MegaSearchPoll {
    fn name(&self) -> &'static str {
        "MegaSearchPoll"
    }

    fn start(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        if s.stop.is_none() {
            let points = mega_points(s);
            s.enqueue(points);
        }
        Ok(())
    }

    fn run(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        if !s.queue.is_empty() {
            let opportunism = s.params.opportunism;
            s.dispatch(Some(s.k), opportunism);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::objective_blackbox;
    use crate::mads::Mads;
    use crate::params::{Params, Searches};
    use crate::point::Point;
    use crate::problem::{OutputKind, Problem};

    fn solver_with(searches: Searches, mega: bool) -> Mads {
        let problem = Problem::new(
            2,
            vec![OutputKind::Obj],
            objective_blackbox(|x| x.iter().map(|v| v * v).sum()),
        )
        .with_x0(vec![2.0, 2.0])
        .validate()
        .unwrap();
        let mut params = Params::default_for(&problem);
        params.searches = searches;
        params.mega_search_poll = mega;
        params.seed = 424242;
        let mut solver = Mads::new(problem, params).unwrap();
        solver.initialize().unwrap();
        solver
    }

    #[test]
    fn with_searches_off_mega_reduces_to_the_poll_set() {
        let mut mega = solver_with(Searches::none(), true);
        let mut plain = solver_with(Searches::none(), false);
        let mega_set: Vec<Point> = mega_points(mega.state_mut())
            .into_iter()
            .map(|t| t.point)
            .collect();
        let poll_set: Vec<Point> = poll_trials(plain.state_mut())
            .into_iter()
            .map(|t| t.point)
            .collect();
        assert_eq!(mega_set, poll_set);
    }

    #[test]
    fn duplicate_points_are_dispatched_once() {
        let mesh = crate::mesh::MeshState::new(Point::new(vec![0.0]), 1.0, 0.5).unwrap();
        let a = TrialPoint::new(Point::new(vec![1.0]), Generator::Speculative)
            .with_mesh(mesh.clone());
        let b = TrialPoint::new(Point::new(vec![1.0]), Generator::Poll).with_mesh(mesh.clone());
        let c = TrialPoint::new(Point::new(vec![-1.0]), Generator::Poll).with_mesh(mesh);
        let kept = dedup_trials(vec![a, b, c]);
        assert_eq!(kept.len(), 2);
        // First writer wins: the search's tag survives on the shared point.
        assert_eq!(kept[0].generator, Generator::Speculative);
        assert_eq!(kept[1].point, Point::new(vec![-1.0]));
    }

    #[test]
    fn mega_iteration_evaluates_search_and_poll_together() {
        let mut searches = Searches::none();
        searches.speculative = true;
        let mut solver = solver_with(searches, true);
        solver.state_mut().last_success_direction = Some(vec![1.0, 0.0]);
        let before = solver.evaluations();
        solver.iterate().unwrap();
        // One speculative point plus 2n poll points, no early cutoff within
        // generation: everything lands in one burst. Opportunism may still
        // trim the tail, so bound rather than pin.
        let spent = solver.evaluations() - before;
        assert!(spent >= 1, "at least the speculative point is evaluated");
        assert!(spent <= 5, "at most 1 + 2n points in the burst");
    }
}
