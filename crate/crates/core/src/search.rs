//! Best-first synthesis over circuit structures.
//!
//! The frontier is ordered by `f(n) = slope * distance(n) + cnot_count(n)`,
//! where `distance(n)` is the optimized distance of the node's structure to
//! the target. Each pop expands the node(s) into one child per topology
//! placement; children are instantiated in parallel and checked against the
//! acceptance threshold in placement order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{CircuitStructure, EvalPlan};
use crate::error::{Error, Result};
use crate::gates::GateSet;
use crate::matrix::{trace_inner_abs, ComplexMatrix, Unitary};
use crate::optimizer::{default_budget, derive_seed, minimize, multistart_minimize, ObjectiveSpec, OptimizerKind};
use crate::topology::Topology;

/// Fitted slope of remaining CNOTs against distance.
pub const DEFAULT_HEURISTIC_SLOPE: f64 = 9.3623;
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Known CNOT upper bounds for `q`-qubit unitaries, used as the default
/// depth limit.
pub fn default_delta(num_qubits: usize) -> usize {
    match num_qubits {
        0 | 1 => 0,
        2 => 3,
        3 => 20,
        4 => 100,
        // 0.16 * (4^q + 2 * 4^q) rounded up
        q => (0.48 * 4f64.powi(q as i32)).ceil() as usize,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SearchMode {
    #[default]
    AStar,
    /// Uniform-cost order on CNOT count; the distance plays no role.
    Bfs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub epsilon: f64,
    /// CNOT limit. `None` picks [`default_delta`] for the register size.
    pub delta: Option<usize>,
    pub heuristic_slope: f64,
    pub beam_width: usize,
    pub mode: SearchMode,
    /// Worker threads for successor instantiation; 0 uses all cores.
    pub parallelism: usize,
    /// Expand both orientations of orientation-sensitive two-qubit gates.
    pub both_orientations: bool,
    /// Seed children with the parent's optimum for inherited parameters.
    pub warm_start: bool,
    pub optimizer: OptimizerKind,
    pub budget_multiplier: f64,
    pub restarts: usize,
    pub rng_seed: u64,
    /// Wall-clock limit checked before each frontier pop.
    pub time_limit: Option<Duration>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            delta: None,
            heuristic_slope: DEFAULT_HEURISTIC_SLOPE,
            beam_width: 1,
            mode: SearchMode::AStar,
            parallelism: 0,
            both_orientations: false,
            warm_start: true,
            optimizer: OptimizerKind::Cobyla,
            budget_multiplier: 1.0,
            restarts: 1,
            rng_seed: 0,
            time_limit: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if !(self.heuristic_slope >= 0.0) {
            return Err(Error::InvalidConfig("heuristic slope must be non-negative".into()));
        }
        if self.beam_width == 0 {
            return Err(Error::InvalidConfig("beam width must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if !(self.budget_multiplier > 0.0) {
            return Err(Error::InvalidConfig("budget multiplier must be positive".into()));
        }
        Ok(())
    }

    pub fn delta_for(&self, num_qubits: usize) -> usize {
        self.delta.unwrap_or_else(|| default_delta(num_qubits))
    }
}

/// `h(d) = slope * d`.
pub fn heuristic(distance: f64, slope: f64) -> f64 {
    slope * distance
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchNode {
    pub structure: CircuitStructure,
    pub distance: f64,
    pub params: Vec<f64>,
    pub priority: f64,
}

impl SearchNode {
    pub fn cnot_count(&self) -> usize {
        self.structure.cnot_count()
    }
}

/// One instantiated node, in the order the search evaluated them.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub node_id: usize,
    pub parent_id: Option<usize>,
    pub cnot_count: usize,
    pub distance: f64,
    pub priority: f64,
    pub placement: Option<(usize, usize)>,
    pub evaluations: usize,
    pub elapsed: Duration,
}

impl TraceRecord {
    pub const HEADER: &'static str =
        "node_id,parent_id,cnot_count,distance,priority,placement,evaluations,elapsed_s";

    /// Parses one line written by the `Display` impl.
    pub fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 8 {
            return Err(format!("expected 8 fields, found {}", cols.len()));
        }
        let num = |k: usize| cols[k].parse::<f64>().map_err(|_| format!("bad number `{}`", cols[k]));
        let int = |k: usize| cols[k].parse::<usize>().map_err(|_| format!("bad integer `{}`", cols[k]));
        let parent_id = if cols[1] == "-" { None } else { Some(int(1)?) };
        let placement = if cols[5] == "-" {
            None
        } else {
            let (a, b) = cols[5]
                .split_once('-')
                .ok_or_else(|| format!("bad placement `{}`", cols[5]))?;
            Some((
                a.parse().map_err(|_| format!("bad placement `{}`", cols[5]))?,
                b.parse().map_err(|_| format!("bad placement `{}`", cols[5]))?,
            ))
        };
        Ok(Self {
            node_id: int(0)?,
            parent_id,
            cnot_count: int(2)?,
            distance: num(3)?,
            priority: num(4)?,
            placement,
            evaluations: int(6)?,
            elapsed: Duration::from_secs_f64(num(7)?),
        })
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parent = self.parent_id.map_or("-".to_string(), |p| p.to_string());
        let placement = self
            .placement
            .map_or("-".to_string(), |(c, t)| format!("{c}-{t}"));
        write!(
            f,
            "{},{},{},{:e},{:e},{},{},{:.6}",
            self.node_id,
            parent,
            self.cnot_count,
            self.distance,
            self.priority,
            placement,
            self.evaluations,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub solution: Option<SearchNode>,
    pub solution_id: Option<usize>,
    pub nodes_expanded: usize,
    pub optimizer_calls: usize,
    pub evaluations: usize,
    pub wall_time: Duration,
    pub trace: Vec<TraceRecord>,
    /// The search stopped at `time_limit` without a solution.
    pub timed_out: bool,
}

impl SearchResult {
    pub fn cnot_count(&self) -> Option<usize> {
        self.solution.as_ref().map(SearchNode::cnot_count)
    }

    /// `(distance, remaining CNOTs)` for every node on the path from the root
    /// to the solution, the raw material for [`fit_heuristic`].
    pub fn solution_path_points(&self) -> Vec<(f64, f64)> {
        let (Some(id), Some(sol)) = (self.solution_id, &self.solution) else {
            return Vec::new();
        };
        path_points(&self.trace, id, sol.cnot_count())
    }

    pub fn trace_text(&self) -> String {
        let mut out = String::from(TraceRecord::HEADER);
        out.push('\n');
        for r in &self.trace {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parses trace text as written by [`SearchResult::trace_text`]. The header
/// line is optional.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && l.trim() != TraceRecord::HEADER)
        .map(|(i, l)| TraceRecord::parse_line(l).map_err(|m| Error::parse(i + 1, m)))
        .collect()
}

/// Walks parent links back from `solution_id`.
pub fn path_points(trace: &[TraceRecord], solution_id: usize, final_cnots: usize) -> Vec<(f64, f64)> {
    let mut points = Vec::new();
    let mut cursor = Some(solution_id);
    while let Some(id) = cursor {
        let Some(rec) = trace.iter().find(|r| r.node_id == id) else {
            break;
        };
        points.push((rec.distance, (final_cnots - rec.cnot_count.min(final_cnots)) as f64));
        cursor = rec.parent_id;
    }
    points.reverse();
    points
}

struct Frontier {
    priority: f64,
    cnot_count: usize,
    order: usize,
    node_id: usize,
    node: SearchNode,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // BinaryHeap is a max-heap; the best entry must compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.cnot_count.cmp(&self.cnot_count))
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// Distance objective `x -> D(U(n, x), target)` over a compiled plan.
pub fn distance_objective<'a>(plan: &'a EvalPlan, target: &'a ComplexMatrix) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    let dim = target.rows();
    move |x: &[f64]| {
        let mut buf: Vec<Complex64> = Vec::with_capacity(dim * dim);
        plan.evaluate_into(x, &mut buf);
        let u = ComplexMatrix::from_vec_unchecked(dim, dim, buf);
        (1.0 - trace_inner_abs(&u, target) / dim as f64).max(0.0)
    }
}

/// Seed derived from the structure itself so a node is instantiated the same
/// way no matter when or in which batch the search reaches it.
fn node_seed(base: u64, structure: &CircuitStructure) -> u64 {
    structure
        .placements()
        .iter()
        .fold(derive_seed(base, 1), |acc, &(c, t)| {
            derive_seed(acc ^ ((c as u64) << 32 | t as u64), 7)
        })
}

struct Instantiated {
    distance: f64,
    params: Vec<f64>,
    evaluations: usize,
}

fn instantiate(
    structure: &CircuitStructure,
    target: &ComplexMatrix,
    parent_params: Option<&[f64]>,
    cfg: &SearchConfig,
) -> Result<Instantiated> {
    let plan = structure.eval_plan();
    let objective = distance_objective(&plan, target);
    let dim = structure.param_count();
    let spec = ObjectiveSpec::new(dim, &objective)
        .with_budget(default_budget(dim, cfg.budget_multiplier))
        .with_target(cfg.epsilon / 10.0);
    let seed_value = node_seed(cfg.rng_seed, structure);
    let warm: Option<Vec<f64>> = match parent_params {
        Some(parent) if cfg.warm_start => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed_value, 99));
            let mut x = parent.to_vec();
            x.extend((parent.len()..dim).map(|_| rng.gen_range(-0.1..0.1)));
            Some(x)
        }
        _ => None,
    };
    let out = multistart_minimize(&spec, warm.as_deref(), cfg.restarts, seed_value, cfg.optimizer)?;
    let distance = if out.best_value.is_finite() {
        out.best_value
    } else {
        f64::INFINITY
    };
    Ok(Instantiated {
        distance,
        params: out.best_point,
        evaluations: out.evaluations_used,
    })
}

/// Continues optimizing an accepted solution until the optimizer's step size
/// converges, without the early stop used while searching.
fn polish(node: &mut SearchNode, target: &ComplexMatrix, cfg: &SearchConfig) -> Result<usize> {
    let plan = node.structure.eval_plan();
    let objective = distance_objective(&plan, target);
    let dim = node.structure.param_count();
    let spec = ObjectiveSpec::new(dim, &objective)
        .with_budget(default_budget(dim, cfg.budget_multiplier))
        .with_target(f64::NEG_INFINITY);
    let seed = derive_seed(node_seed(cfg.rng_seed, &node.structure), 3);
    let out = minimize(&spec, Some(&node.params), seed, cfg.optimizer)?;
    if out.best_value < node.distance {
        node.distance = out.best_value;
        node.params = out.best_point;
    }
    Ok(out.evaluations_used)
}

/// Synthesizes `target` over `gate_set` on `topology`.
///
/// Returns a result with `solution == None` when every structure within the
/// CNOT limit has been tried without reaching `epsilon`.
pub fn synthesize(target: &Unitary, topology: &Topology, gate_set: &GateSet, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let q = topology.num_qubits();
    if target.dim() != 1 << q {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{0} but the topology has {q} qubits",
            target.dim()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let delta = cfg.delta_for(q);
    let slope = match cfg.mode {
        SearchMode::AStar => cfg.heuristic_slope,
        SearchMode::Bfs => 0.0,
    };
    let priority_of = |distance: f64, cnots: usize| {
        let h = heuristic(distance, slope);
        // An aborted node keeps its place by CNOT count alone.
        if h.is_finite() { h + cnots as f64 } else { f64::MAX }
    };
    let placements = topology.placements(gate_set.two_qubit_kind, cfg.both_orientations);
    let target_m = target.matrix();

    let mut result = SearchResult {
        solution: None,
        solution_id: None,
        nodes_expanded: 0,
        optimizer_calls: 0,
        evaluations: 0,
        wall_time: Duration::ZERO,
        trace: Vec::new(),
        timed_out: false,
    };

    let root = CircuitStructure::root(q)?;
    let inst = instantiate(&root, target_m, None, cfg)?;
    result.optimizer_calls += 1;
    result.evaluations += inst.evaluations;
    let root_node = SearchNode {
        priority: priority_of(inst.distance, 0),
        structure: root,
        distance: inst.distance,
        params: inst.params,
    };
    result.trace.push(TraceRecord {
        node_id: 0,
        parent_id: None,
        cnot_count: 0,
        distance: root_node.distance,
        priority: root_node.priority,
        placement: None,
        evaluations: inst.evaluations,
        elapsed: start.elapsed(),
    });
    if root_node.distance < cfg.epsilon {
        let mut root_node = root_node;
        result.evaluations += polish(&mut root_node, target_m, cfg)?;
        result.solution = Some(root_node);
        result.solution_id = Some(0);
        result.wall_time = start.elapsed();
        return Ok(result);
    }

    let mut next_id = 1;
    let mut order = 0;
    let mut heap = BinaryHeap::new();
    if delta > 0 {
        heap.push(Frontier {
            priority: root_node.priority,
            cnot_count: 0,
            order,
            node_id: 0,
            node: root_node,
        });
        order += 1;
    }

    loop {
        if cfg.time_limit.is_some_and(|t| start.elapsed() >= t) {
            result.timed_out = true;
            break;
        }
        let mut beam = Vec::with_capacity(cfg.beam_width);
        while beam.len() < cfg.beam_width {
            match heap.pop() {
                Some(entry) => beam.push(entry),
                None => break,
            }
        }
        if beam.is_empty() {
            break;
        }
        result.nodes_expanded += beam.len();

        let mut jobs = Vec::with_capacity(beam.len() * placements.len());
        for parent in &beam {
            for &placement in &placements {
                jobs.push((
                    next_id,
                    parent.node_id,
                    placement,
                    parent.node.structure.expand(placement, gate_set),
                    &parent.node.params,
                ));
                next_id += 1;
            }
        }
        let evaluated: Vec<Result<Instantiated>> = pool.install(|| {
            jobs.par_iter()
                .map(|(_, _, _, child, parent_params)| instantiate(child, target_m, Some(parent_params), cfg))
                .collect()
        });

        for ((id, parent_id, placement, child, _), inst) in jobs.into_iter().zip(evaluated) {
            let inst = inst?;
            result.optimizer_calls += 1;
            result.evaluations += inst.evaluations;
            let cnots = child.cnot_count();
            let node = SearchNode {
                priority: priority_of(inst.distance, cnots),
                structure: child,
                distance: inst.distance,
                params: inst.params,
            };
            result.trace.push(TraceRecord {
                node_id: id,
                parent_id: Some(parent_id),
                cnot_count: cnots,
                distance: node.distance,
                priority: node.priority,
                placement: Some(placement),
                evaluations: inst.evaluations,
                elapsed: start.elapsed(),
            });
            if result.solution.is_none() && node.distance < cfg.epsilon {
                result.solution = Some(node);
                result.solution_id = Some(id);
            } else if result.solution.is_none() && cnots < delta {
                heap.push(Frontier {
                    priority: node.priority,
                    cnot_count: cnots,
                    order,
                    node_id: id,
                    node,
                });
                order += 1;
            }
        }
        if let Some(node) = result.solution.as_mut() {
            result.evaluations += polish(node, target_m, cfg)?;
            break;
        }
    }
    result.wall_time = start.elapsed();
    Ok(result)
}

/// Uniform-cost search on CNOT count.
pub fn synthesize_bfs(target: &Unitary, topology: &Topology, gate_set: &GateSet, cfg: &SearchConfig) -> Result<SearchResult> {
    let cfg = SearchConfig {
        mode: SearchMode::Bfs,
        ..cfg.clone()
    };
    synthesize(target, topology, gate_set, &cfg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeuristicFit {
    pub slope: f64,
    /// Zero for a fit through the origin.
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FitKind {
    #[default]
    ThroughOrigin,
    Affine,
}

/// Least-squares fit of remaining CNOTs (`y`) against distance (`x`).
pub fn fit_heuristic(points: &[(f64, f64)], kind: FitKind) -> Result<HeuristicFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {}", points.len())));
    }
    let n = points.len() as f64;
    let x0 = points[0].0;
    if points.iter().all(|p| p.0 == x0) {
        return Err(Error::DegenerateFit("all distances are equal".into()));
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (slope, intercept) = match kind {
        FitKind::ThroughOrigin => {
            let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
            let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
            (sxy / sxx, 0.0)
        }
        FitKind::Affine => {
            let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
            let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
            let slope = sxy / sxx;
            (slope, mean_y - slope * mean_x)
        }
    };
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(HeuristicFit {
        slope,
        intercept,
        r_squared,
        points: points.len(),
    })
}
