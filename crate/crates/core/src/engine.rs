//! Bundles an immutable mesh with its Steiner graph, a reusable Dijkstra
//! workspace and the numeric knobs shared by every operation. The metric
//! subroutines (fields, level sets, paths, shortening) hang off this type
//! from their own modules.

use core::cell::RefCell;

use crate::mesh::SurfaceMesh;
use crate::steiner::{Scratch, SteinerGraph};

/// Tolerances and budgets. Factors marked ×√A scale with the surface size.
#[derive(Clone, Debug)]
pub struct Params {
    pub steiner_k: u32,
    /// Stationarity tolerance for wedge angles, radians.
    pub tol_angle: f64,
    /// Iteration cap for one shortening run.
    pub max_iters: u32,
    /// Point-termination threshold, ×√A.
    pub eps_point_factor: f64,
    /// Birkhoff arc granularity, ×√A.
    pub rho_factor: f64,
    /// Dichotomy scan step, ×√A.
    pub scan_dt_factor: f64,
    /// Scan bisection width, ×√A.
    pub scan_tol_factor: f64,
    /// Nudge for singular level values, ×√A.
    pub level_nudge_factor: f64,
    /// Relative slack for ray prefix-minimality certificates.
    pub ray_tol: f64,
    /// Iterations of no progress before classifying termination.
    pub stall_window: u32,
    /// Relative length decrease treated as progress.
    pub stall_rel: f64,
    /// Cap on polyline nodes per shortening arc pass.
    pub max_arcs: usize,
    /// Vertices with |angle deficit| up to this much count as discretization
    /// artifacts: curves through them are stationary in the straightest
    /// sense (equal wedges) rather than the minimizing sense.
    pub vertex_allowance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            steiner_k: 3,
            tol_angle: 1e-3,
            max_iters: 10_000,
            eps_point_factor: 1e-4,
            rho_factor: 0.1,
            scan_dt_factor: 0.05,
            scan_tol_factor: 1e-3,
            level_nudge_factor: 1e-4,
            ray_tol: 1e-3,
            stall_window: 25,
            stall_rel: 1e-9,
            max_arcs: 512,
            vertex_allowance: 0.5,
        }
    }
}

pub struct Engine<'m> {
    pub mesh: &'m SurfaceMesh,
    pub graph: SteinerGraph,
    pub params: Params,
    scratch: RefCell<Scratch>,
}

impl<'m> Engine<'m> {
    pub fn new(mesh: &'m SurfaceMesh) -> Engine<'m> {
        Engine::with_params(mesh, Params::default())
    }

    pub fn with_params(mesh: &'m SurfaceMesh, params: Params) -> Engine<'m> {
        let graph = SteinerGraph::build(mesh, params.steiner_k);
        let scratch = RefCell::new(Scratch::new(graph.n_nodes()));
        Engine {
            mesh,
            graph,
            params,
            scratch,
        }
    }

    pub(crate) fn with_scratch<R>(&self, f: impl FnOnce(&mut Scratch) -> R) -> R {
        let mut s = self.scratch.borrow_mut();
        f(&mut s)
    }

    pub fn sqrt_area(&self) -> f64 {
        self.mesh.sqrt_area()
    }

    pub fn eps_point(&self) -> f64 {
        self.params.eps_point_factor * self.sqrt_area()
    }

    pub fn rho(&self) -> f64 {
        self.params.rho_factor * self.sqrt_area()
    }
}
