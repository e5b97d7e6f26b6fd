//! Snake displacement of the linear network.
//!
//! Each edge is a cubic Hermite element over (value, slope) degrees of freedom
//! per axis, for the energy `∫ α·d′² + β·d″² dx`. Forces pull region
//! centroids towards equidistant positions; boundary nodes carry no load and
//! move only through the elastic coupling.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, RegionSet};
use crate::network::{build_network, LinearNetwork};

/// A length given either in input units or as a multiple of the grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Length {
    Absolute(f64),
    GridRelative(f64),
}

impl Length {
    pub fn resolve(self, grid_size: f64) -> f64 {
        match self {
            Length::Absolute(v) => v,
            Length::GridRelative(k) => k * grid_size,
        }
    }

    fn value(self) -> f64 {
        match self {
            Length::Absolute(v) | Length::GridRelative(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnakeConfig {
    /// Elasticity weight on `d′²`.
    pub alpha: f64,
    /// Stiffness weight on `d″²`.
    pub beta: f64,
    /// Ceiling on the largest centroid force per iteration.
    pub t_f: Length,
    /// Convergence threshold on the largest node displacement.
    pub epsilon: Length,
    /// Iteration budget.
    pub t_s: usize,
    /// Tikhonov factor relative to the largest stiffness diagonal.
    pub lambda: f64,
    /// Step viscosity `γ`: a uniform force field moves the network by `f / γ`
    /// per step. Larger values take shorter, smoother steps.
    pub damping: f64,
    /// Optional per-iteration `[alpha, beta]` multipliers; iterations past the
    /// end of the list use the last entry.
    pub stiffness_schedule: Vec<[f64; 2]>,
    /// Rebuild the triangulation from the moved nodes after every accepted step.
    pub rebuild_network: bool,
}

impl Default for SnakeConfig {
    fn default() -> Self {
        SnakeConfig {
            alpha: 100_000.0,
            beta: 100_000.0,
            t_f: Length::GridRelative(0.5),
            epsilon: Length::GridRelative(0.01),
            t_s: 30,
            lambda: 1e-8,
            damping: 0.1,
            stiffness_schedule: Vec::new(),
            rebuild_network: false,
        }
    }
}

impl SnakeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Validation(format!("snake config: {msg}")));
        if !(self.alpha >= 0.0 && self.beta >= 0.0)
            || !(self.alpha.is_finite() && self.beta.is_finite())
        {
            return bad("alpha and beta must be finite and non-negative");
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return bad("alpha and beta cannot both be zero");
        }
        if !(self.t_f.value() > 0.0) {
            return bad("t_f must be positive");
        }
        if !(self.epsilon.value() > 0.0) || !self.epsilon.value().is_finite() {
            return bad("epsilon must be positive");
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be positive");
        }
        if !(self.damping >= 0.0) || !self.damping.is_finite() {
            return bad("damping must be finite and non-negative");
        }
        if self
            .stiffness_schedule
            .iter()
            .flatten()
            .any(|m| !(*m > 0.0) || !m.is_finite())
        {
            return bad("stiffness multipliers must be positive");
        }
        Ok(())
    }

    fn stiffness_at(&self, step: usize) -> (f64, f64) {
        match self
            .stiffness_schedule
            .get(step)
            .or(self.stiffness_schedule.last())
        {
            Some([ma, mb]) => (self.alpha * ma, self.beta * mb),
            None => (self.alpha, self.beta),
        }
    }
}

/// Grid cell size `sqrt(A / M)`.
pub fn grid_size(total_area: f64, m: usize) -> Result<f64> {
    if !(total_area > 0.0) || !total_area.is_finite() {
        return Err(Error::Validation(format!(
            "total area must be positive, got {total_area}"
        )));
    }
    if m == 0 {
        return Err(Error::Validation("region count must be at least 1".into()));
    }
    Ok((total_area / m as f64).sqrt())
}

/// Target position for every node, indexed by node id.
///
/// A centroid's target is the mean over its centroid neighbours `j` of
/// `rv_j + s·û_ij`, each neighbour proposing a spot at distance `s` from
/// itself along the current direction. Boundary nodes (and centroids without
/// centroid neighbours) target their current position.
pub fn desired_positions(net: &LinearNetwork, s: f64) -> Result<Vec<Point>> {
    if !(s > 0.0) {
        return Err(Error::Validation(format!(
            "grid size must be positive, got {s}"
        )));
    }
    let nodes = net.nodes();
    nodes
        .iter()
        .map(|node| {
            if !node.is_centroid() {
                return Ok(node.pos);
            }
            let mut sum = Point::ORIGIN;
            let mut count = 0usize;
            for j in net.centroid_neighbors(node.id) {
                let other = nodes[j].pos;
                let delta = node.pos - other;
                let dist = delta.norm();
                if dist == 0.0 {
                    return Err(Error::DegenerateGeometry(format!(
                        "centroids {} and {j} coincide",
                        node.id
                    )));
                }
                sum += other + delta * (s / dist);
                count += 1;
            }
            Ok(if count == 0 {
                node.pos
            } else {
                sum / count as f64
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    /// Per-node force, zero on boundary nodes.
    pub forces: Vec<Point>,
    /// Largest force magnitude after clamping.
    pub f_max: f64,
    /// Largest force magnitude before clamping.
    pub raw_max: f64,
}

/// `target - position` on centroids, uniformly rescaled so the largest
/// magnitude does not exceed `t_f`.
pub fn compute_forces(net: &LinearNetwork, targets: &[Point], t_f: f64) -> ForceField {
    let mut forces: Vec<Point> = net
        .nodes()
        .iter()
        .map(|n| {
            if n.is_centroid() {
                targets[n.id] - n.pos
            } else {
                Point::ORIGIN
            }
        })
        .collect();
    let raw_max = forces.iter().map(|f| f.norm()).fold(0.0, f64::max);
    let mut f_max = raw_max;
    if raw_max > t_f {
        let k = t_f / raw_max;
        for f in forces.iter_mut() {
            *f = *f * k;
        }
        f_max = forces.iter().map(|f| f.norm()).fold(0.0, f64::max);
    }
    ForceField {
        forces,
        f_max,
        raw_max,
    }
}

/// 4×4 stiffness of one segment of length `h` over `(d0, d0′, d1, d1′)`.
///
/// Sum of the elastic (`α·d′²`) and bending (`β·d″²`) Hermite element
/// matrices; `K[0][0] = (6αh² + 60β) / (5h³)`.
pub fn element_stiffness(h: f64, alpha: f64, beta: f64) -> Result<[[f64; 4]; 4]> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Validation(format!(
            "segment length must be positive, got {h}"
        )));
    }
    let h2 = h * h;
    let h3 = h2 * h;
    let a = alpha * h2;
    let b = 60.0 * beta;
    let k00 = (6.0 * a + b) / (5.0 * h3);
    let k01 = (a + b) / (10.0 * h2);
    let k11 = (2.0 * a + b) / (15.0 * h);
    let k13 = (-a + b) / (30.0 * h);
    Ok([
        [k00, k01, -k00, k01],
        [k01, k11, -k01, k13],
        [-k00, -k01, k00, -k01],
        [k01, k13, -k01, k11],
    ])
}

/// Load vector of one segment for force components `f0`, `f1` at its ends.
pub fn element_load(h: f64, f0: f64, f1: f64) -> [f64; 4] {
    let h2 = h * h;
    [h * f0 / 2.0, h2 * f0 / 12.0, h * f1 / 2.0, -h2 * f1 / 12.0]
}

/// Consistent 4×4 mass matrix of one segment of length `h`; it maps a
/// uniform unit value field to [`element_load`]`(h, 1, 1)`.
pub fn element_mass(h: f64) -> [[f64; 4]; 4] {
    let c = h / 420.0;
    let h2 = h * h;
    [
        [156.0 * c, 22.0 * h * c, 54.0 * c, -13.0 * h * c],
        [22.0 * h * c, 4.0 * h2 * c, 13.0 * h * c, -3.0 * h2 * c],
        [54.0 * c, 13.0 * h * c, 156.0 * c, -22.0 * h * c],
        [-13.0 * h * c, -3.0 * h2 * c, -22.0 * h * c, 4.0 * h2 * c],
    ]
}

/// Assembled per-axis system. Node `i` owns value DOF `2i` and slope DOF
/// `2i + 1`; the stiffness matrix is shared by both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SnakeSystem {
    pub k: DMatrix<f64>,
    pub fx: DVector<f64>,
    pub fy: DVector<f64>,
}

impl SnakeSystem {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn num_nodes(&self) -> usize {
        self.dim() / 2
    }

    pub fn value_dof(node: usize) -> usize {
        2 * node
    }

    pub fn slope_dof(node: usize) -> usize {
        2 * node + 1
    }

    pub fn max_diagonal(&self) -> f64 {
        self.k.diagonal().iter().copied().fold(0.0, f64::max)
    }
}

/// Standard assembly of [`element_stiffness`] and [`element_load`] over every
/// network edge.
pub fn assemble(
    net: &LinearNetwork,
    forces: &ForceField,
    alpha: f64,
    beta: f64,
) -> Result<SnakeSystem> {
    assemble_scaled(net, &forces.forces, alpha, beta, 1.0)
}

/// Assembly with lengths and forces expressed in units of `scale`.
fn assemble_scaled(
    net: &LinearNetwork,
    forces: &[Point],
    alpha: f64,
    beta: f64,
    scale: f64,
) -> Result<SnakeSystem> {
    let dim = 2 * net.len();
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    let mut fx = DVector::<f64>::zeros(dim);
    let mut fy = DVector::<f64>::zeros(dim);
    for e in net.edges() {
        let h = e.length / scale;
        let ke = element_stiffness(h, alpha, beta)?;
        let dofs = element_dofs(e.a, e.b);
        for (r, &dr) in dofs.iter().enumerate() {
            for (c, &dc) in dofs.iter().enumerate() {
                k[(dr, dc)] += ke[r][c];
            }
        }
        let (fa, fb) = (forces[e.a] / scale, forces[e.b] / scale);
        let lx = element_load(h, fa.x, fb.x);
        let ly = element_load(h, fa.y, fb.y);
        for (r, &dr) in dofs.iter().enumerate() {
            fx[dr] += lx[r];
            fy[dr] += ly[r];
        }
    }
    Ok(SnakeSystem { k, fx, fy })
}

/// Consistent mass matrix of the whole network, lengths in units of `scale`.
fn assemble_mass(net: &LinearNetwork, scale: f64) -> DMatrix<f64> {
    let dim = 2 * net.len();
    let mut mass = DMatrix::<f64>::zeros(dim, dim);
    for e in net.edges() {
        let me = element_mass(e.length / scale);
        let dofs = element_dofs(e.a, e.b);
        for (r, &dr) in dofs.iter().enumerate() {
            for (c, &dc) in dofs.iter().enumerate() {
                mass[(dr, dc)] += me[r][c];
            }
        }
    }
    mass
}

fn element_dofs(a: usize, b: usize) -> [usize; 4] {
    [
        SnakeSystem::value_dof(a),
        SnakeSystem::slope_dof(a),
        SnakeSystem::value_dof(b),
        SnakeSystem::slope_dof(b),
    ]
}

/// Solution of one snake solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    /// Value-DOF displacement per node.
    pub nodes: Vec<Point>,
    /// Full solution vectors including slope DOFs.
    pub dx: DVector<f64>,
    pub dy: DVector<f64>,
}

impl Displacement {
    pub fn max_norm(&self) -> f64 {
        self.nodes.iter().map(|d| d.norm()).fold(0.0, f64::max)
    }
}

/// `f - A·x` with every product and sum carried in double-double precision.
fn compensated_residual(a: &DMatrix<f64>, x: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        f.len(),
        (0..f.len()).map(|i| {
            let (mut sum, mut err) = (f[i], 0.0);
            for j in 0..x.len() {
                let p = -a[(i, j)] * x[j];
                let p_err = (-a[(i, j)]).mul_add(x[j], -p);
                let t = sum + p;
                let z = t - sum;
                err += (sum - (t - z)) + (p - z) + p_err;
                sum = t;
            }
            sum + err
        }),
    )
}

/// Solves `(K + λ̂·I)·d = f` per axis with `λ̂ = lambda · max diag K`.
pub fn solve(system: &SnakeSystem, lambda: f64) -> Result<Displacement> {
    let dim = system.dim();
    let shift = lambda * system.max_diagonal();
    let mut a = system.k.clone();
    for i in 0..dim {
        a[(i, i)] += shift;
    }
    // Iterative refinement with a compensated residual recovers the accuracy
    // lost to the conditioning of the lightly regularized system.
    let refine = |f: &DVector<f64>, solve: &dyn Fn(&DVector<f64>) -> Option<DVector<f64>>| {
        let mut x = solve(f)?;
        for _ in 0..2 {
            x += solve(&compensated_residual(&a, &x, f))?;
        }
        Some(x)
    };
    let (dx, dy) = match a.clone().cholesky() {
        Some(ch) => {
            let solve = |b: &DVector<f64>| Some(ch.solve(b));
            (refine(&system.fx, &solve), refine(&system.fy, &solve))
        }
        None => {
            debug!("Cholesky failed on a {dim}x{dim} snake system, falling back to LU");
            let lu = a.clone().lu();
            let solve = |b: &DVector<f64>| lu.solve(b);
            (refine(&system.fx, &solve), refine(&system.fy, &solve))
        }
    };
    let (Some(dx), Some(dy)) = (dx, dy) else {
        return Err(Error::Numerical(format!(
            "snake system of dimension {dim} is singular (shift {shift:e})"
        )));
    };
    if dx.iter().chain(dy.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite snake displacement (dimension {dim}, shift {shift:e}, max diag {:e})",
            system.max_diagonal()
        )));
    }
    let nodes = (0..dim / 2)
        .map(|i| Point::new(dx[SnakeSystem::value_dof(i)], dy[SnakeSystem::value_dof(i)]))
        .collect();
    Ok(Displacement { nodes, dx, dy })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Largest displacement fell to or below epsilon.
    Converged,
    /// The displacement grew relative to the previous accepted step; that step
    /// was discarded.
    Diverging,
    /// Iteration budget exhausted.
    IterationLimit,
}

impl StopReason {
    pub fn condition(self) -> u8 {
        match self {
            StopReason::Converged => 1,
            StopReason::Diverging => 2,
            StopReason::IterationLimit => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub f_max: f64,
    pub max_displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    /// Accepted iterations.
    pub steps: usize,
    pub max_disp_prev: Option<f64>,
    pub max_disp_curr: Option<f64>,
    pub trace: Vec<StepRecord>,
    pub stop: StopReason,
    /// Largest displacement of the step rejected by the divergence rule.
    pub rejected_displacement: Option<f64>,
}

/// One semi-implicit (backward Euler) snake step.
///
/// Lengths and forces are expressed in grid-size units and `alpha`, `beta`
/// are normalized to sum to one, so only their ratio matters. The step
/// solves `(K + γ·M + λ̂·I)·d = f` with `M` the consistent mass matrix:
/// a uniform force field translates the network by `f / γ`, and the
/// stiffness smooths everything else.
pub fn snake_step(
    net: &LinearNetwork,
    s: f64,
    t_f: f64,
    alpha: f64,
    beta: f64,
    lambda: f64,
    damping: f64,
) -> Result<(ForceField, Vec<Point>)> {
    let targets = desired_positions(net, s)?;
    let field = compute_forces(net, &targets, t_f);
    let w = alpha + beta;
    let mut system = assemble_scaled(net, &field.forces, alpha / w, beta / w, s)?;
    system.k += assemble_mass(net, s) * damping;
    let d = solve(&system, lambda)?;
    Ok((field, d.nodes.into_iter().map(|p| p * s).collect()))
}

/// Iterates snake steps until convergence, divergence or the step budget.
///
/// The grid size comes from the original region areas and stays fixed.
pub fn run_snake(
    net: &LinearNetwork,
    rs: &RegionSet,
    cfg: &SnakeConfig,
) -> Result<(LinearNetwork, IterationState)> {
    cfg.validate()?;
    let s = grid_size(rs.total_area(), rs.len())?;
    let t_f = cfg.t_f.resolve(s);
    let eps = cfg.epsilon.resolve(s);
    let mut current = net.clone();
    let mut state = IterationState {
        steps: 0,
        max_disp_prev: None,
        max_disp_curr: None,
        trace: Vec::new(),
        stop: StopReason::IterationLimit,
        rejected_displacement: None,
    };
    loop {
        if state.steps >= cfg.t_s {
            state.stop = StopReason::IterationLimit;
            break;
        }
        let (alpha, beta) = cfg.stiffness_at(state.steps);
        let (field, disp) = snake_step(&current, s, t_f, alpha, beta, cfg.lambda, cfg.damping)?;
        let max_d = disp.iter().map(|d| d.norm()).fold(0.0, f64::max);
        if let Some(prev) = state.max_disp_curr {
            if max_d > prev {
                state.stop = StopReason::Diverging;
                state.rejected_displacement = Some(max_d);
                break;
            }
        }
        let moved: Vec<Point> = current
            .positions()
            .into_iter()
            .zip(&disp)
            .map(|(p, &d)| p + d)
            .collect();
        current = current.with_positions(&moved)?;
        if cfg.rebuild_network {
            current = rebuild(&current, rs, s).unwrap_or_else(|e| {
                warn!("network rebuild failed ({e}); keeping the previous topology");
                current.clone()
            });
        }
        state.steps += 1;
        state.max_disp_prev = state.max_disp_curr;
        state.max_disp_curr = Some(max_d);
        state.trace.push(StepRecord {
            step: state.steps,
            f_max: field.f_max,
            max_displacement: max_d,
        });
        if max_d <= eps {
            state.stop = StopReason::Converged;
            break;
        }
    }
    Ok((current, state))
}

fn rebuild(net: &LinearNetwork, rs: &RegionSet, s: f64) -> Result<LinearNetwork> {
    let boundary = crate::geometry::Polygon::new(net.boundary_ring())?;
    let moved = rs.clone().with_boundary(boundary);
    build_network(&moved, Some(&net.centroid_positions()), s)
}
