//! Trial points: candidates queued for evaluation.

use serde::{Deserialize, Serialize};

use crate::mesh::MeshState;
use crate::point::Point;

/// Which component proposed a trial point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// A starting point.
    Initial,
    Poll,
    Speculative,
    LatinHypercube,
    NelderMead,
    QuadModel,
    /// Full-space decomposition lane.
    PsdPollster,
    /// Subproblem decomposition lane.
    PsdWorker,
}

/// A candidate point together with its provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialPoint {
    pub point: Point,
    pub generator: Generator,
    /// Direction that generated the point (relative to the frame center),
    /// when one exists. Queue ordering by direction similarity uses this.
    pub direction: Option<Vec<f64>>,
    /// Mesh state at generation time.
    pub mesh: Option<MeshState>,
}

impl TrialPoint {
    pub fn new(point: Point, generator: Generator) -> Self {
        TrialPoint {
            point,
            generator,
            direction: None,
            mesh: None,
        }
    }

    pub fn with_direction(mut self, direction: Vec<f64>) -> Self {
        self.direction = Some(direction);
        self
    }

    pub fn with_mesh(mut self, mesh: MeshState) -> Self {
        self.mesh = Some(mesh);
        self
    }
}
