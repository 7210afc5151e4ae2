//! Global branch graph.
//!
//! The branch through `(0, γ)` is approximated by equilibria sampled on a
//! λ-grid, joined by continuation links along traced curves and by
//! heteroclinic orbits found by integrating the gradient flow out of
//! unstable equilibria. The trivial solution is present at every grid λ but
//! joins the component only through the root or a heteroclinic contact.

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::conley::{check_hypotheses, HypothesisCheck, IndexProfile};
use crate::equilibria::{
    branch_switch, continue_branch, linearization_inertia, newton_solve, same_equilibrium,
    ContinuationControls, ContinuedBranch, Direction, Equilibrium, SwitchOptions, Termination,
};
use crate::error::{invalid, Error, Result};
use crate::flow::{integrate_until, FlowControls, TerminalStatus};
use crate::galerkin::{dist, norm, Problem};
use crate::nonlinearity::{bifurcation_values_in_window, NonlinearityFamily};
use crate::spectral::SpectralDomain;

/// Label carried by every graph and report.
pub const GRAPH_LABEL: &str = "Γ approximation";

/// Tolerance for identifying `γ` with a detected bifurcation value.
pub const ROOT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeteroclinicControls {
    /// Distance of the launch point from the source along a unit direction.
    pub delta: f64,
    pub flow: FlowControls,
    /// V-norm distance within which an endpoint matches a known equilibrium.
    pub match_tol: f64,
    /// A run stops once `||u_t|| ≤ settle_tol·(1 + ||u||)`; its endpoint is
    /// then Newton-polished.
    pub settle_tol: f64,
    pub seed: u64,
}

impl Default for HeteroclinicControls {
    fn default() -> Self {
        HeteroclinicControls {
            delta: 1e-3,
            flow: FlowControls {
                horizon: 1e3,
                tol: 1e-9,
                norm_budget: 1e3,
            },
            match_tol: 1e-4,
            settle_tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeEnd {
    /// Converged to a hyperbolic equilibrium.
    Connected,
    /// Converged, but the limit is not hyperbolic or Newton failed on it.
    Unresolved,
    HorizonReached,
    NormBudgetExceeded,
    IntegrationFailure,
}

/// One integrated trajectory out of an unstable equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicEdge {
    /// Index into [`HeteroclinicSweep::equilibria`].
    pub source: usize,
    /// `None` for open edges.
    pub target: Option<usize>,
    pub end: EdgeEnd,
    pub endpoint: Vec<f64>,
    /// J non-increasing along the samples and `J(source) > J(target)`.
    pub energy_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicSweep {
    pub lambda: f64,
    /// The input equilibria followed by those discovered as limits.
    pub equilibria: Vec<Equilibrium>,
    pub discovered: usize,
    pub edges: Vec<HeteroclinicEdge>,
}

/// Normalizes `v` after dropping entries below `1e-12·max|v_i|`, which
/// keeps launches along invariant subspaces exactly inside them.
fn unit(v: Vec<f64>) -> Vec<f64> {
    let cut = 1e-12 * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let v: Vec<f64> = v
        .into_iter()
        .map(|x| if x.abs() < cut { 0.0 } else { x })
        .collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

fn launch_directions(unstable: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let r = unstable.len();
    if r <= 2 {
        return unstable
            .iter()
            .flat_map(|v| [unit(v.clone()), unit(v.iter().map(|x| -x).collect())])
            .collect();
    }
    (0..4 * r)
        .map(|_| {
            let mut w = vec![0.0; unstable[0].len()];
            for v in unstable {
                let c: f64 = rng.sample(StandardNormal);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi += c * vi;
                }
            }
            unit(w)
        })
        .collect()
}

fn find_match(d: &SpectralDomain, list: &[Equilibrium], x: &[f64], tol: f64) -> Option<usize> {
    list.iter()
        .enumerate()
        .map(|(i, e)| {
            let diff: Vec<f64> = e.coeffs.iter().zip(x).map(|(a, b)| a - b).collect();
            (i, d.v_norm(&diff))
        })
        .filter(|&(_, r)| r <= tol)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Integrates the flow from `±δ` perturbations along the unstable
/// directions of every equilibrium with Morse index at least one, and
/// records where each trajectory ends.
pub fn heteroclinics_at(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    equilibria: &[Equilibrium],
    controls: &HeteroclinicControls,
) -> Result<HeteroclinicSweep> {
    if !(controls.delta > 0.0 && controls.match_tol > 0.0 && controls.settle_tol > 0.0) {
        return Err(invalid("heteroclinic δ and tolerances must be positive"));
    }
    for e in equilibria {
        if e.coeffs.len() != d.dim() {
            return Err(invalid("equilibrium does not match the domain"));
        }
        if e.lambda != lambda {
            return Err(invalid(format!(
                "equilibrium at λ = {} supplied for λ = {lambda}",
                e.lambda
            )));
        }
        if !e.is_hyperbolic() {
            return Err(invalid(format!(
                "equilibrium with margin {:e} is not hyperbolic",
                e.margin
            )));
        }
    }
    let problem = Problem::new(d, fam, lambda);
    let mut list = equilibria.to_vec();
    let mut edges = Vec::new();
    for (i, source) in equilibria.iter().enumerate() {
        if source.morse_index == 0 {
            continue;
        }
        let inertia = linearization_inertia(d, fam, lambda, &source.coeffs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(
            controls.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let j_source = problem.energy(&source.coeffs);
        for w in launch_directions(&inertia.unstable_directions(), &mut rng) {
            let start: Vec<f64> = source
                .coeffs
                .iter()
                .zip(&w)
                .map(|(a, x)| a + controls.delta * x)
                .collect();
            let settled = |s: &crate::flow::TrajectorySample| {
                d.v_norm(&problem.velocity(&s.coeffs))
                    <= controls.settle_tol * (1.0 + d.v_norm(&s.coeffs))
            };
            let record = match integrate_until(d, fam, lambda, &start, &controls.flow, settled) {
                Ok(r) => r,
                Err(Error::IntegrationFailure { .. }) => {
                    edges.push(HeteroclinicEdge {
                        source: i,
                        target: None,
                        end: EdgeEnd::IntegrationFailure,
                        endpoint: start,
                        energy_monotone: false,
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let energies: Vec<f64> = record.samples.iter().map(|s| s.energy).collect();
            let mut monotone = energies
                .windows(2)
                .all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()))
                && energies.first().is_some_and(|&e0| e0 < j_source);
            let endpoint = record.last().coeffs.clone();
            let (target, end) = match record.status {
                TerminalStatus::Converged | TerminalStatus::Stopped => {
                    let hit = find_match(d, &list, &endpoint, controls.match_tol).or_else(|| {
                        let eq = newton_solve(d, fam, lambda, &endpoint).ok()?;
                        if !eq.is_hyperbolic() {
                            return None;
                        }
                        match find_match(d, &list, &eq.coeffs, controls.match_tol) {
                            Some(k) => Some(k),
                            None => {
                                list.push(eq);
                                Some(list.len() - 1)
                            }
                        }
                    });
                    match hit {
                        Some(k) if k == i => (None, EdgeEnd::Unresolved),
                        Some(k) => (Some(k), EdgeEnd::Connected),
                        None => (None, EdgeEnd::Unresolved),
                    }
                }
                TerminalStatus::NormBudgetExceeded => (None, EdgeEnd::NormBudgetExceeded),
                _ => (None, EdgeEnd::HorizonReached),
            };
            if let Some(k) = target {
                monotone &= problem.energy(&list[k].coeffs) < j_source;
            }
            edges.push(HeteroclinicEdge {
                source: i,
                target,
                end,
                endpoint,
                energy_monotone: monotone,
            });
        }
    }
    Ok(HeteroclinicSweep {
        lambda,
        discovered: list.len() - equilibria.len(),
        equilibria: list,
        edges,
    })
}

/// Stable node identifier: branch id and step along the branch. Branch 0 is
/// the trivial line, where the step is the grid index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub branch: usize,
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Trivial,
    Branch,
    /// Limit of a heteroclinic sweep not lying on a traced branch.
    Discovered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub grid_index: usize,
    pub lambda: f64,
    pub energy: f64,
    pub in_component: bool,
    pub equilibrium: Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Adjacent grid samples of one traced curve.
    Continuation,
    Heteroclinic,
    /// Root to the first sample of a primary branch.
    Root,
    /// Parent branch to the first sample of a secondary branch.
    Switch,
    /// Last sample of a branch that returned to the trivial line.
    TrivialContact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub source: NodeId,
    /// `None` for open heteroclinic edges.
    pub target: Option<NodeId>,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<EdgeEnd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_monotone: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub id: usize,
    pub parent: Option<usize>,
    pub seed_lambda: f64,
    pub termination: Termination,
    /// λ of the last traced point.
    pub end_lambda: f64,
    pub lambda_range: (f64, f64),
    pub max_v_norm: f64,
    pub steps: usize,
    pub events: Vec<crate::equilibria::BranchEvent>,
    pub in_component: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchControls {
    pub window: (f64, f64),
    /// Grid spacing; by default each gap between consecutive window edges
    /// and bifurcation values is cut into 20 equal pieces.
    #[serde(default)]
    pub lambda_step: Option<f64>,
    pub norm_budget: f64,
    pub max_nodes: usize,
    /// Generations of branch switching at secondary index changes.
    pub secondary_depth: usize,
    pub seed: u64,
    pub switch: SwitchOptions,
    pub continuation: ContinuationControls,
    pub heteroclinic: HeteroclinicControls,
}

impl BranchControls {
    pub fn new(window: (f64, f64), seed: u64) -> Self {
        BranchControls {
            window,
            lambda_step: None,
            norm_budget: 1e3,
            max_nodes: 20_000,
            secondary_depth: 1,
            seed,
            switch: SwitchOptions {
                seed,
                ..SwitchOptions::default()
            },
            continuation: ContinuationControls::default(),
            heteroclinic: HeteroclinicControls {
                seed,
                ..HeteroclinicControls::default()
            },
        }
    }
}

/// Exploration budgets that ran out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exhaustion {
    pub max_nodes: bool,
    /// Some branch stopped on step failure or the step cap.
    pub continuation: bool,
}

impl Exhaustion {
    pub fn any(&self) -> bool {
        self.max_nodes || self.continuation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGraph {
    pub label: String,
    pub gamma: f64,
    pub window: (f64, f64),
    pub norm_budget: f64,
    pub max_nodes: usize,
    pub upsilon: Vec<f64>,
    pub grid: Vec<f64>,
    pub root: NodeId,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub branches: Vec<BranchSummary>,
    pub exhausted: Exhaustion,
}

impl BranchGraph {
    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn component(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.in_component)
    }

    /// Recomputes `in_component` for every node and branch from the edges.
    pub fn mark_component(&mut self) {
        let index: std::collections::HashMap<NodeId, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let Some(t) = e.target else { continue };
            if let (Some(&a), Some(&b)) = (index.get(&e.source), index.get(&t)) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let root = index.get(&self.root).map(|&r| find(&mut parent, r));
        for i in 0..self.nodes.len() {
            self.nodes[i].in_component = Some(find(&mut parent, i)) == root;
        }
        for b in &mut self.branches {
            b.in_component = self
                .nodes
                .iter()
                .any(|n| n.id.branch == b.id && n.kind == NodeKind::Branch && n.in_component);
        }
    }

    /// Every component node reaches the root through edges.
    pub fn is_connected(&self) -> bool {
        let mut copy = self.clone();
        copy.mark_component();
        copy.nodes
            .iter()
            .zip(&self.nodes)
            .all(|(a, b)| a.in_component == b.in_component)
            && self.node(self.root).is_some_and(|n| n.in_component)
    }

    fn grid_index(&self, lambda: f64) -> Result<usize> {
        let (lo, hi) = self.window;
        if !(lambda >= lo && lambda <= hi) {
            return Err(Error::OutOfRange(format!(
                "λ = {lambda} outside the explored window [{lo}, {hi}]"
            )));
        }
        Ok(self
            .grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - lambda).abs().total_cmp(&(b.1 - lambda).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0))
    }
}

/// Grid points: window edges and the bifurcation values inside the window,
/// each gap subdivided evenly.
pub fn lambda_grid(window: (f64, f64), upsilon: &[f64], step: Option<f64>) -> Vec<f64> {
    let mut knots = vec![window.0];
    knots.extend(
        upsilon
            .iter()
            .copied()
            .filter(|&g| g > window.0 && g < window.1),
    );
    knots.push(window.1);
    let mut grid = vec![window.0];
    for w in knots.windows(2) {
        let len = w[1] - w[0];
        let n = match step {
            Some(h) => (len / h).ceil().max(1.0) as usize,
            None => 20,
        };
        for k in 1..=n {
            grid.push(if k == n {
                w[1]
            } else {
                w[0] + len * k as f64 / n as f64
            });
        }
    }
    grid
}

struct Builder<'a> {
    d: &'a SpectralDomain,
    fam: &'a NonlinearityFamily,
    g: BranchGraph,
}

impl Builder<'_> {
    fn push_node(
        &mut self,
        id: NodeId,
        kind: NodeKind,
        grid_index: usize,
        eq: Equilibrium,
    ) -> NodeId {
        let energy = Problem::new(self.d, self.fam, eq.lambda).energy(&eq.coeffs);
        self.g.nodes.push(Node {
            id,
            kind,
            grid_index,
            lambda: eq.lambda,
            energy,
            in_component: false,
            equilibrium: eq,
        });
        id
    }

    fn existing_at(&self, grid_index: usize, coeffs: &[f64]) -> Option<NodeId> {
        self.g
            .nodes
            .iter()
            .find(|n| n.grid_index == grid_index && same_equilibrium(&n.equilibrium.coeffs, coeffs))
            .map(|n| n.id)
    }

    fn edge(&mut self, kind: EdgeKind, source: NodeId, target: NodeId, lambda: f64) {
        if source != target {
            self.g.edges.push(Edge {
                kind,
                source,
                target: Some(target),
                lambda,
                end: None,
                energy_monotone: None,
            });
        }
    }

    /// Resamples a traced branch on the grid and links the samples. Returns
    /// the node ids in arclength order.
    fn resample(&mut self, id: usize, branch: &ContinuedBranch) -> Vec<NodeId> {
        let (lo, hi) = branch.lambda_range();
        let mut samples: Vec<(usize, f64, usize, Equilibrium)> = Vec::new();
        for (k, &lambda) in self.g.grid.clone().iter().enumerate() {
            if lambda < lo || lambda > hi {
                continue;
            }
            for (seg, eq) in branch.solve_at(self.d, self.fam, lambda) {
                if eq.is_trivial() || eq.h_norm < 1e-8 {
                    continue;
                }
                let la = branch.points[seg].equilibrium.lambda;
                let lb = branch.points[seg + 1].equilibrium.lambda;
                let frac = if lb == la {
                    0.0
                } else {
                    (lambda - la) / (lb - la)
                };
                samples.push((seg, frac, k, eq));
            }
        }
        samples.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut ids: Vec<NodeId> = Vec::new();
        for (step, (_, _, k, eq)) in samples.into_iter().enumerate() {
            if self.g.nodes.len() >= self.g.max_nodes {
                self.g.exhausted.max_nodes = true;
                break;
            }
            let lambda = eq.lambda;
            let nid = match self.existing_at(k, &eq.coeffs) {
                Some(n) => n,
                None => self.push_node(NodeId { branch: id, step }, NodeKind::Branch, k, eq),
            };
            if let Some(&prev) = ids.last() {
                self.edge(EdgeKind::Continuation, prev, nid, lambda);
            }
            if ids.last() != Some(&nid) {
                ids.push(nid);
            }
        }
        ids
    }
}

/// Traces the branch through `(0, γ)` and assembles its graph
/// approximation on the λ-grid.
pub fn build_global_branch(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    gamma: f64,
    controls: &BranchControls,
) -> Result<BranchGraph> {
    let (lo, hi) = controls.window;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(invalid("λ-window must be a finite interval with lo < hi"));
    }
    if controls.lambda_step.is_some_and(|h| !(h > 0.0)) {
        return Err(invalid("λ-step must be positive"));
    }
    if !(controls.norm_budget > 0.0) || controls.max_nodes == 0 {
        return Err(invalid("norm budget and node budget must be positive"));
    }
    let upsilon = bifurcation_values_in_window(fam, d, controls.window)?;
    let gamma = *upsilon
        .iter()
        .find(|&&g| (g - gamma).abs() <= ROOT_TOL)
        .ok_or_else(|| {
            invalid(format!(
                "γ = {gamma} is not a detected bifurcation value in the window"
            ))
        })?;
    let grid = lambda_grid(controls.window, &upsilon, controls.lambda_step);
    let root_index = grid
        .iter()
        .position(|&l| l == gamma)
        .ok_or_else(|| invalid("γ on the window edge"))?;

    let mut b = Builder {
        d,
        fam,
        g: BranchGraph {
            label: GRAPH_LABEL.to_string(),
            gamma,
            window: controls.window,
            norm_budget: controls.norm_budget,
            max_nodes: controls.max_nodes,
            upsilon,
            grid: grid.clone(),
            root: NodeId {
                branch: 0,
                step: root_index,
            },
            nodes: Vec::new(),
            edges: Vec::new(),
            branches: Vec::new(),
            exhausted: Exhaustion::default(),
        },
    };
    for (k, &lambda) in grid.iter().enumerate() {
        b.push_node(
            NodeId { branch: 0, step: k },
            NodeKind::Trivial,
            k,
            Equilibrium::trivial(d, fam, lambda),
        );
    }

    let cont = ContinuationControls {
        window: controls.window,
        norm_budget: controls.norm_budget,
        ..controls.continuation
    };

    // Work list: (parent, anchor node, seed, direction, generation).
    let mut queue: std::collections::VecDeque<(
        Option<usize>,
        NodeId,
        Equilibrium,
        Direction,
        usize,
    )> = std::collections::VecDeque::new();
    for seed in branch_switch(d, fam, gamma, &vec![0.0; d.dim()], &controls.switch)? {
        queue.push_back((None, b.g.root, seed, Direction::IncreasingNorm, 0));
    }
    let mut traced: Vec<ContinuedBranch> = Vec::new();
    while let Some((parent, anchor, seed, direction, generation)) = queue.pop_front() {
        if b.g.nodes.len() >= controls.max_nodes {
            b.g.exhausted.max_nodes = true;
            break;
        }
        let branch = continue_branch(d, fam, &seed, direction, &cont)?;
        let id = b.g.branches.len() + 1;
        let ids = b.resample(id, &branch);
        if let Some(&first) = ids.first() {
            let kind = if parent.is_none() {
                EdgeKind::Root
            } else {
                EdgeKind::Switch
            };
            b.edge(kind, anchor, first, seed.lambda);
        }
        if matches!(
            branch.termination,
            Termination::StepFailure | Termination::MaxSteps
        ) {
            b.g.exhausted.continuation = true;
        }
        let end_lambda = branch
            .points
            .last()
            .map_or(seed.lambda, |p| p.equilibrium.lambda);
        if branch.termination == Termination::TrivialIntersection {
            if let Some(&last) = ids.last() {
                let k = b.g.grid_index(end_lambda.clamp(lo, hi))?;
                b.edge(
                    EdgeKind::TrivialContact,
                    last,
                    NodeId { branch: 0, step: k },
                    end_lambda,
                );
            }
        }
        if generation < controls.secondary_depth {
            for (anchor, seed, direction) in
                secondary_seeds(d, fam, &branch, &ids, &b.g, &controls.switch)
            {
                queue.push_back((Some(id), anchor, seed, direction, generation + 1));
            }
        }
        b.g.branches.push(BranchSummary {
            id,
            parent,
            seed_lambda: seed.lambda,
            termination: branch.termination,
            end_lambda,
            lambda_range: branch.lambda_range(),
            max_v_norm: branch
                .points
                .iter()
                .map(|p| p.equilibrium.v_norm)
                .fold(0.0, f64::max),
            steps: branch.points.len(),
            events: branch.events.clone(),
            in_component: false,
        });
        traced.push(branch);
    }

    // Heteroclinic sweeps at every grid λ from the trivial and branch nodes.
    let mut next_family = b.g.branches.len() + 1;
    let mut previous: Vec<(usize, Vec<f64>)> = Vec::new();
    for (k, &lambda) in grid.iter().enumerate() {
        let sources: Vec<NodeId> = b
            .g
            .nodes
            .iter()
            .filter(|n| {
                n.grid_index == k && n.kind != NodeKind::Discovered && n.equilibrium.is_hyperbolic()
            })
            .map(|n| n.id)
            .collect();
        if !sources
            .iter()
            .any(|id| b.g.node(*id).is_some_and(|n| n.equilibrium.morse_index > 0))
        {
            previous.clear();
            continue;
        }
        let eqs: Vec<Equilibrium> = sources
            .iter()
            .map(|id| b.g.node(*id).unwrap().equilibrium.clone())
            .collect();
        let hc = HeteroclinicControls {
            seed: controls.heteroclinic.seed.wrapping_add(k as u64),
            ..controls.heteroclinic
        };
        let sweep = heteroclinics_at(d, fam, lambda, &eqs, &hc)?;
        let mut ids = sources.clone();
        let mut current = Vec::new();
        for eq in &sweep.equilibria[eqs.len()..] {
            let family = previous
                .iter()
                .filter(|(_, c)| dist(c, &eq.coeffs) <= 0.25 * (1.0 + norm(&eq.coeffs)))
                .min_by(|x, y| dist(&x.1, &eq.coeffs).total_cmp(&dist(&y.1, &eq.coeffs)))
                .map(|(f, _)| *f)
                .unwrap_or_else(|| {
                    next_family += 1;
                    next_family - 1
                });
            current.push((family, eq.coeffs.clone()));
            let id = match b.existing_at(k, &eq.coeffs) {
                Some(n) => n,
                None if b.g.nodes.len() < controls.max_nodes => b.push_node(
                    NodeId {
                        branch: family,
                        step: k,
                    },
                    NodeKind::Discovered,
                    k,
                    eq.clone(),
                ),
                None => {
                    b.g.exhausted.max_nodes = true;
                    NodeId {
                        branch: usize::MAX,
                        step: k,
                    }
                }
            };
            ids.push(id);
        }
        previous = current;
        for e in &sweep.edges {
            b.g.edges.push(Edge {
                kind: EdgeKind::Heteroclinic,
                source: ids[e.source],
                target: e.target.map(|t| ids[t]).filter(|t| t.branch != usize::MAX),
                lambda,
                end: Some(e.end),
                energy_monotone: Some(e.energy_monotone),
            });
        }
    }

    b.g.mark_component();
    Ok(b.g)
}

/// Seeds for branches bifurcating at index changes of `branch` that are not
/// folds.
fn secondary_seeds(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    branch: &ContinuedBranch,
    ids: &[NodeId],
    g: &BranchGraph,
    switch: &SwitchOptions,
) -> Vec<(NodeId, Equilibrium, Direction)> {
    let folds: Vec<usize> = branch
        .events
        .iter()
        .filter_map(|e| match e {
            crate::equilibria::BranchEvent::Fold { step, .. } => Some(*step),
            _ => None,
        })
        .collect();
    let mut out = Vec::new();
    for ev in &branch.events {
        let crate::equilibria::BranchEvent::IndexChange {
            step,
            lambda,
            arclength,
            ..
        } = *ev
        else {
            continue;
        };
        if step == 0 || folds.iter().any(|&f| f + 1 >= step && f <= step + 1) {
            continue;
        }
        let (p, q) = (&branch.points[step - 1], &branch.points[step]);
        let t = if q.arclength > p.arclength {
            (arclength - p.arclength) / (q.arclength - p.arclength)
        } else {
            0.5
        };
        let guess: Vec<f64> = p
            .equilibrium
            .coeffs
            .iter()
            .zip(&q.equilibrium.coeffs)
            .map(|(a, b)| a + t * (b - a))
            .collect();
        let Ok(base) = newton_solve(d, fam, lambda, &guess) else {
            continue;
        };
        let opts = SwitchOptions {
            kernel_tol: switch.kernel_tol.max(10.0 * base.margin),
            ..*switch
        };
        let Ok(seeds) = branch_switch(d, fam, lambda, &base.coeffs, &opts) else {
            continue;
        };
        let anchor = ids
            .iter()
            .filter_map(|id| g.node(*id))
            .min_by(|a, b| {
                (a.lambda - lambda)
                    .abs()
                    .total_cmp(&(b.lambda - lambda).abs())
                    .then(
                        dist(&a.equilibrium.coeffs, &base.coeffs)
                            .total_cmp(&dist(&b.equilibrium.coeffs, &base.coeffs)),
                    )
            })
            .map(|n| n.id);
        let Some(anchor) = anchor else { continue };
        for seed in seeds {
            let on_parent = branch
                .solve_at(d, fam, seed.lambda)
                .iter()
                .any(|(_, e)| same_equilibrium(&e.coeffs, &seed.coeffs));
            if on_parent {
                continue;
            }
            let direction = if seed.lambda > lambda {
                Direction::IncreasingLambda
            } else {
                Direction::DecreasingLambda
            };
            out.push((anchor, seed, direction));
        }
    }
    out
}

/// Component nodes at the grid λ nearest to `lambda`, with the heteroclinic
/// edges leaving them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub lambda: f64,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl Section {
    pub fn nontrivial(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind != NodeKind::Trivial)
    }
}

pub fn section(g: &BranchGraph, lambda: f64) -> Result<Section> {
    let k = g.grid_index(lambda)?;
    let nodes: Vec<Node> = g
        .nodes
        .iter()
        .filter(|n| n.grid_index == k && n.in_component)
        .cloned()
        .collect();
    let edges = g
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Heteroclinic && nodes.iter().any(|n| n.id == e.source))
        .cloned()
        .collect();
    Ok(Section {
        lambda: g.grid[k],
        nodes,
        edges,
    })
}

/// Grid λ at which the trivial solution lies in the component, together
/// with `γ`.
pub fn j_set(g: &BranchGraph) -> Vec<f64> {
    let mut out: Vec<f64> = g
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Trivial && n.in_component)
        .map(|n| n.lambda)
        .collect();
    out.push(g.gamma);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    UnboundedInNorm,
    UnboundedInLambda,
    MeetsTrivialAt { mu0: f64, between: Vec<f64> },
    UndeterminedBudget,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::UnboundedInNorm => "UnboundedInNorm",
            Classification::UnboundedInLambda => "UnboundedInLambda",
            Classification::MeetsTrivialAt { .. } => "MeetsTrivialAt",
            Classification::UndeterminedBudget => "UndeterminedBudget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub window: (f64, f64),
    pub norm_budget: f64,
    pub max_nodes: usize,
    pub nodes_used: usize,
    pub exhausted: Exhaustion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// λ-range of the nontrivial component nodes.
    pub lambda_range: Option<(f64, f64)>,
    pub max_v_norm: f64,
    pub j_set: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub label: String,
    pub gamma: f64,
    pub classification: Classification,
    pub budgets: Budgets,
    pub evidence: Evidence,
    pub hypotheses: HypothesisCheck,
    /// Set when the hypotheses hold and the branch nonetheless returned to
    /// the trivial line, which the theory rules out.
    pub consistency_flag: Option<String>,
}

/// Classifies the component of the root. Unboundedness is relative to the
/// graph's budgets.
pub fn classify(g: &BranchGraph, profile: &IndexProfile) -> OutcomeReport {
    let hypotheses = check_hypotheses(profile);
    let live: Vec<&BranchSummary> = g.branches.iter().filter(|b| b.in_component).collect();
    let nontrivial: Vec<&Node> = g
        .component()
        .filter(|n| n.kind != NodeKind::Trivial)
        .collect();
    let lambda_range = nontrivial.iter().fold(None, |acc: Option<(f64, f64)>, n| {
        Some(acc.map_or((n.lambda, n.lambda), |(a, b)| {
            (a.min(n.lambda), b.max(n.lambda))
        }))
    });
    let max_v_norm = nontrivial
        .iter()
        .map(|n| n.equilibrium.v_norm)
        .fold(0.0, f64::max);
    let last = g.grid.len().saturating_sub(1);
    let at_edge = nontrivial
        .iter()
        .any(|n| n.grid_index == 0 || n.grid_index == last);

    let tol = 1e-3 * (1.0 + g.gamma.abs());
    let meets = live
        .iter()
        .filter(|b| {
            b.termination == Termination::TrivialIntersection
                && (b.end_lambda - g.gamma).abs() > tol
        })
        .map(|b| b.end_lambda)
        .next();
    let classification = if live
        .iter()
        .any(|b| b.termination == Termination::NormBudget)
        || max_v_norm >= g.norm_budget
    {
        Classification::UnboundedInNorm
    } else if at_edge
        || live
            .iter()
            .any(|b| b.termination == Termination::WindowEdge)
    {
        Classification::UnboundedInLambda
    } else if let Some(mu0) = meets {
        let (a, b) = if mu0 < g.gamma {
            (mu0, g.gamma)
        } else {
            (g.gamma, mu0)
        };
        let between = profile
            .upsilon
            .iter()
            .copied()
            .filter(|&v| v > a + ROOT_TOL && v < b - ROOT_TOL)
            .collect();
        Classification::MeetsTrivialAt { mu0, between }
    } else {
        Classification::UndeterminedBudget
    };
    let consistency_flag = match (&classification, hypotheses.all()) {
        (Classification::MeetsTrivialAt { mu0, .. }, true) => Some(format!(
            "classify: branch returned to the trivial line at λ = {mu0} although H1-H3 hold; the theory predicts an unbounded branch"
        )),
        _ => None,
    };
    OutcomeReport {
        label: GRAPH_LABEL.to_string(),
        gamma: g.gamma,
        classification,
        budgets: Budgets {
            window: g.window,
            norm_budget: g.norm_budget,
            max_nodes: g.max_nodes,
            nodes_used: g.nodes.len(),
            exhausted: g.exhausted,
        },
        evidence: Evidence {
            lambda_range,
            max_v_norm,
            j_set: j_set(g),
        },
        hypotheses,
        consistency_flag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conley::HomotopyType;
    use crate::spectral::DomainShape;

    fn line(m: usize) -> SpectralDomain {
        SpectralDomain::new(DomainShape::unit_interval_pi(), m).unwrap()
    }

    fn amplitude(lambda: f64) -> f64 {
        ((2.0 * std::f64::consts::PI / 3.0) * (lambda - 1.0)).sqrt()
    }

    #[test]
    fn grid_hits_bifurcation_values() {
        let g = lambda_grid((0.5, 10.0), &[1.0, 4.0, 9.0], None);
        assert_eq!(g.len(), 81);
        for v in [0.5, 1.0, 4.0, 9.0, 10.0] {
            assert!(g.contains(&v));
        }
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let h = lambda_grid((0.0, 1.0), &[], Some(0.3));
        assert_eq!(h.len(), 5);
    }

    #[test]
    fn heteroclinics_from_trivial_one_unstable_direction() {
        let d = line(8);
        let fam = NonlinearityFamily::cubic(-1.0);
        let zero = Equilibrium::trivial(&d, &fam, 2.5);
        let s = heteroclinics_at(&d, &fam, 2.5, &[zero], &HeteroclinicControls::default()).unwrap();
        assert_eq!(s.edges.len(), 2);
        assert_eq!(s.discovered, 2);
        for e in &s.edges {
            assert_eq!(e.end, EdgeEnd::Connected);
            assert!(e.energy_monotone);
            let t = &s.equilibria[e.target.unwrap()];
            assert_eq!(t.morse_index, 0);
            assert!((t.coeffs[0].abs() - amplitude(2.5)).abs() < 0.1 * amplitude(2.5));
        }
        let signs: Vec<f64> = s
            .edges
            .iter()
            .map(|e| s.equilibria[e.target.unwrap()].coeffs[0].signum())
            .collect();
        assert_ne!(signs[0], signs[1]);
    }

    #[test]
    fn heteroclinics_none_from_stable() {
        let d = line(6);
        let fam = NonlinearityFamily::cubic(-1.0);
        let zero = Equilibrium::trivial(&d, &fam, 0.5);
        let s = heteroclinics_at(&d, &fam, 0.5, &[zero], &HeteroclinicControls::default()).unwrap();
        assert!(s.edges.is_empty());
    }

    #[test]
    fn heteroclinics_two_unstable_directions() {
        let d = line(8);
        let fam = NonlinearityFamily::cubic(-1.0);
        let zero = Equilibrium::trivial(&d, &fam, 4.5);
        let s = heteroclinics_at(&d, &fam, 4.5, &[zero], &HeteroclinicControls::default()).unwrap();
        assert_eq!(s.edges.len(), 4);
        assert!(s
            .edges
            .iter()
            .all(|e| e.end == EdgeEnd::Connected && e.energy_monotone));
        let dominant: Vec<usize> = s
            .edges
            .iter()
            .map(|e| {
                let c = &s.equilibria[e.target.unwrap()].coeffs;
                (0..c.len())
                    .max_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs()))
                    .unwrap()
            })
            .collect();
        assert_eq!(dominant.iter().filter(|&&k| k == 0).count(), 2);
        assert_eq!(dominant.iter().filter(|&&k| k == 1).count(), 2);
    }

    #[test]
    fn heteroclinics_reject_non_hyperbolic() {
        let d = line(4);
        let fam = NonlinearityFamily::cubic(-1.0);
        let zero = Equilibrium::trivial(&d, &fam, 1.0);
        let err = heteroclinics_at(&d, &fam, 1.0, &[zero], &HeteroclinicControls::default());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    fn supercritical() -> (SpectralDomain, NonlinearityFamily, BranchGraph) {
        let d = line(6);
        let fam = NonlinearityFamily::cubic(-1.0);
        let g = build_global_branch(&d, &fam, 1.0, &BranchControls::new((0.5, 6.0), 7)).unwrap();
        (d, fam, g)
    }

    #[test]
    fn supercritical_graph() {
        let (d, fam, g) = supercritical();
        assert!((g.gamma - 1.0).abs() < 1e-9);
        assert!(g.is_connected());
        assert_eq!(g.node(g.root).unwrap().lambda, g.gamma);

        for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Heteroclinic) {
            let s = g.node(e.source).unwrap();
            assert!(s.equilibrium.morse_index >= 1);
            if let Some(t) = e.target.and_then(|t| g.node(t)) {
                assert!(s.energy > t.energy);
            }
        }

        let below = section(&g, 0.6).unwrap();
        assert!(below.nodes.is_empty());
        let at = section(&g, 1.0).unwrap();
        assert_eq!(at.nodes.len(), 1);
        assert_eq!(at.nodes[0].id, g.root);

        let s = section(&g, 2.5).unwrap();
        assert_eq!(s.nodes.len(), 3);
        assert_eq!(s.edges.len(), 2);
        for &l in &g.grid {
            if l > 1.0 && l != 4.0 {
                let s = section(&g, l).unwrap();
                assert!(s.nontrivial().count() >= 2, "λ = {l}");
            }
        }
        assert!(matches!(section(&g, 7.0), Err(Error::OutOfRange(_))));

        let j = j_set(&g);
        assert!(j.contains(&1.0));
        assert!(j.iter().all(|&l| l >= 1.0));
        assert!(j.iter().any(|&l| l > 2.0));

        let profile = crate::conley::index_profile(&d, &fam, g.window, &g.upsilon).unwrap();
        let report = classify(&g, &profile);
        assert_eq!(report.classification, Classification::UnboundedInLambda);
        assert!(report.consistency_flag.is_none());
        assert!(report.hypotheses.all());
    }

    #[test]
    fn build_is_deterministic() {
        let (_, _, a) = supercritical();
        let (_, _, b) = supercritical();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn rejects_unknown_gamma() {
        let d = line(4);
        let fam = NonlinearityFamily::cubic(-1.0);
        let err = build_global_branch(&d, &fam, 2.0, &BranchControls::new((0.5, 6.0), 0));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    fn toy(meet: f64) -> (BranchGraph, IndexProfile) {
        let d = line(3);
        let fam = NonlinearityFamily::cubic(-1.0);
        let grid = lambda_grid((0.5, 10.0), &[1.0, 4.0, 9.0], None);
        let mut nodes: Vec<Node> = grid
            .iter()
            .enumerate()
            .map(|(k, &l)| Node {
                id: NodeId { branch: 0, step: k },
                kind: NodeKind::Trivial,
                grid_index: k,
                lambda: l,
                energy: 0.0,
                in_component: false,
                equilibrium: Equilibrium::trivial(&d, &fam, l),
            })
            .collect();
        let root = grid.iter().position(|&l| l == 1.0).unwrap();
        let mut eq = Equilibrium::trivial(&d, &fam, 2.5);
        eq.coeffs[0] = 1.0;
        nodes.push(Node {
            id: NodeId { branch: 1, step: 0 },
            kind: NodeKind::Branch,
            grid_index: root + 5,
            lambda: grid[root + 5],
            energy: -1.0,
            in_component: false,
            equilibrium: eq,
        });
        let edges = vec![Edge {
            kind: EdgeKind::Root,
            source: NodeId {
                branch: 0,
                step: root,
            },
            target: Some(NodeId { branch: 1, step: 0 }),
            lambda: 1.0,
            end: None,
            energy_monotone: None,
        }];
        let mut g = BranchGraph {
            label: GRAPH_LABEL.into(),
            gamma: 1.0,
            window: (0.5, 10.0),
            norm_budget: 1e3,
            max_nodes: 100,
            upsilon: vec![1.0, 4.0, 9.0],
            grid,
            root: NodeId {
                branch: 0,
                step: root,
            },
            nodes,
            edges,
            branches: vec![BranchSummary {
                id: 1,
                parent: None,
                seed_lambda: 1.0,
                termination: Termination::TrivialIntersection,
                end_lambda: meet,
                lambda_range: (1.0, meet),
                max_v_norm: 1.0,
                steps: 10,
                events: vec![],
                in_component: false,
            }],
            exhausted: Exhaustion::default(),
        };
        g.mark_component();
        let profile = IndexProfile::from_values(
            (0.5, 10.0),
            vec![1.0, 4.0, 9.0],
            vec![
                HomotopyType::sphere(0),
                HomotopyType::sphere(1),
                HomotopyType::sphere(2),
                HomotopyType::sphere(3),
            ],
        )
        .unwrap();
        (g, profile)
    }

    #[test]
    fn toy_meets_trivial() {
        let (g, profile) = toy(9.0);
        assert!(g.is_connected());
        let r = classify(&g, &profile);
        assert_eq!(
            r.classification,
            Classification::MeetsTrivialAt {
                mu0: 9.0,
                between: vec![4.0]
            }
        );
        assert!(r.consistency_flag.is_some());
        assert_eq!(r.evidence.j_set, vec![1.0]);
    }

    #[test]
    fn toy_returning_at_root_is_undetermined() {
        let (g, profile) = toy(1.0);
        assert_eq!(
            classify(&g, &profile).classification,
            Classification::UndeterminedBudget
        );
    }
}
