//! Derivative-free minimization of circuit distance objectives.
//!
//! Two methods are available. [`OptimizerKind::Cobyla`] is Powell's
//! linear-approximation trust-region method (via the `cobyla` crate) and is
//! the default. [`OptimizerKind::CmaEs`] is a covariance-matrix-adaptation
//! evolution strategy implemented here, kept as an independent alternative.
//!
//! Every run is deterministic for a given `(objective, seed, rng_seed)`.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Objective evaluation budget for problems up to this many parameters.
pub const BASE_BUDGET: usize = 10_000;
const BASE_BUDGET_DIM: usize = 30;

pub type Objective<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

pub struct ObjectiveSpec<'a> {
    pub dimension: usize,
    pub objective: &'a Objective<'a>,
    /// Maximum number of objective evaluations per run.
    pub budget: usize,
    /// Stop as soon as a value below this is seen.
    pub target_value: f64,
}

impl<'a> ObjectiveSpec<'a> {
    pub fn new(dimension: usize, objective: &'a Objective<'a>) -> Self {
        Self {
            dimension,
            objective,
            budget: default_budget(dimension, 1.0),
            target_value: 0.0,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_target(mut self, target_value: f64) -> Self {
        self.target_value = target_value;
        self
    }

    fn validate(&self, seed: Option<&[f64]>) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("objective dimension must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("evaluation budget must be at least 1".into()));
        }
        if let Some(s) = seed {
            if s.len() != self.dimension {
                return Err(Error::ParamLength {
                    expected: self.dimension,
                    got: s.len(),
                });
            }
        }
        Ok(())
    }
}

/// `BASE_BUDGET` evaluations up to 30 parameters, growing linearly beyond.
pub fn default_budget(dimension: usize, multiplier: f64) -> usize {
    let scale = (dimension as f64 / BASE_BUDGET_DIM as f64).max(1.0);
    ((BASE_BUDGET as f64) * scale * multiplier).ceil().max(1.0) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOutcome {
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub evaluations_used: usize,
    /// True when the best value fell below the target.
    pub converged: bool,
    /// Runs abandoned because the objective returned NaN.
    pub aborted_runs: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    #[default]
    Cobyla,
    CmaEs,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "cobyla" => Ok(Self::Cobyla),
            "cmaes" => Ok(Self::CmaEs),
            other => Err(Error::InvalidConfig(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// Bookkeeping shared by both methods: counts evaluations, remembers the best
/// point, and latches NaN / target / budget stops.
struct Tracker<'a> {
    objective: &'a Objective<'a>,
    budget: usize,
    target: f64,
    evals: usize,
    best_value: f64,
    best_point: Vec<f64>,
    saw_nan: bool,
}

impl<'a> Tracker<'a> {
    fn new(spec: &ObjectiveSpec<'a>) -> Self {
        Self {
            objective: spec.objective,
            budget: spec.budget,
            target: spec.target_value,
            evals: 0,
            best_value: f64::INFINITY,
            best_point: Vec::new(),
            saw_nan: false,
        }
    }

    fn stopped(&self) -> bool {
        self.saw_nan || self.evals >= self.budget || self.best_value < self.target
    }

    /// Evaluates unless a stop condition has latched, in which case the best
    /// value so far is returned without spending budget.
    fn eval(&mut self, x: &[f64]) -> f64 {
        if self.stopped() {
            return self.best_value;
        }
        self.evals += 1;
        let v = (self.objective)(x);
        if v.is_nan() {
            self.saw_nan = true;
            return f64::INFINITY;
        }
        if v < self.best_value || self.best_point.is_empty() {
            self.best_value = v;
            self.best_point = x.to_vec();
        }
        v
    }

    fn finish(self, start: &[f64]) -> OptimizeOutcome {
        let (best_value, best_point) = if self.best_point.is_empty() {
            (f64::INFINITY, start.to_vec())
        } else {
            (self.best_value, self.best_point)
        };
        OptimizeOutcome {
            converged: best_value < self.target,
            best_value,
            best_point,
            evaluations_used: self.evals,
            aborted_runs: usize::from(self.saw_nan),
        }
    }
}

fn random_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-PI..PI)).collect()
}

/// Runs one local minimization from `seed` (or a uniform random point in
/// `[-pi, pi]^n`). The result is never worse than the starting point.
pub fn minimize(
    spec: &ObjectiveSpec<'_>,
    seed: Option<&[f64]>,
    rng_seed: u64,
    kind: OptimizerKind,
) -> Result<OptimizeOutcome> {
    spec.validate(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let start = match seed {
        Some(s) => s.to_vec(),
        None => random_point(spec.dimension, &mut rng),
    };
    let tracker = RefCell::new(Tracker::new(spec));
    // The start is always evaluated first so the outcome can never be worse.
    tracker.borrow_mut().eval(&start);
    match kind {
        OptimizerKind::Cobyla => run_cobyla(&tracker, &start),
        OptimizerKind::CmaEs => run_cmaes(&tracker, &start, seed.is_some(), &mut rng),
    }
    Ok(tracker.into_inner().finish(&start))
}

/// Best of `restarts` independent runs. The first run starts from `seed`
/// when given; later runs start from random points with derived rng seeds.
/// Stops early once a run reaches the target.
pub fn multistart_minimize(
    spec: &ObjectiveSpec<'_>,
    seed: Option<&[f64]>,
    restarts: usize,
    rng_seed: u64,
    kind: OptimizerKind,
) -> Result<OptimizeOutcome> {
    if restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    spec.validate(seed)?;
    let mut best: Option<OptimizeOutcome> = None;
    let mut evaluations = 0;
    let mut aborted = 0;
    for k in 0..restarts {
        let run_seed = derive_seed(rng_seed, k as u64);
        let start = if k == 0 { seed } else { None };
        let out = minimize(spec, start, run_seed, kind)?;
        evaluations += out.evaluations_used;
        aborted += out.aborted_runs;
        let better = best.as_ref().is_none_or(|b| out.best_value < b.best_value);
        if better {
            best = Some(out);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    let mut best = best.expect("at least one restart");
    best.evaluations_used = evaluations;
    best.aborted_runs = aborted;
    Ok(best)
}

/// Seed for restart `k`; restart 0 keeps the caller's seed.
pub fn derive_seed(base: u64, k: u64) -> u64 {
    if k == 0 {
        return base;
    }
    // splitmix64 finalizer
    let mut z = base.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const COBYLA_RHOBEG: f64 = 0.5;
const COBYLA_XTOL: f64 = 1e-10;

fn run_cobyla(tracker: &RefCell<Tracker<'_>>, start: &[f64]) {
    let remaining = {
        let t = tracker.borrow();
        if t.stopped() {
            return;
        }
        t.budget - t.evals
    };
    let n = start.len();
    let func = |x: &[f64], _: &mut ()| tracker.borrow_mut().eval(x);
    let no_constraints: Vec<&dyn cobyla::Func<()>> = Vec::new();
    let stop = cobyla::StopTols {
        xtol_abs: vec![COBYLA_XTOL; n],
        ..cobyla::StopTols::default()
    };
    // Once the tracker latches a stop, the objective turns constant and
    // COBYLA winds down on its own; its status carries no extra information.
    let _ = cobyla::minimize(
        func,
        start,
        &vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        &no_constraints,
        (),
        remaining,
        cobyla::RhoBeg::All(COBYLA_RHOBEG),
        Some(stop),
    );
}

/// (mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates.
fn run_cmaes(tracker: &RefCell<Tracker<'_>>, start: &[f64], seeded: bool, rng: &mut ChaCha8Rng) {
    let n = start.len();
    let nf = n as f64;
    let lambda = 4 + (3.0 * nf.ln()).floor() as usize;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu)
        .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln())
        .collect();
    let wsum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / wsum).collect();
    let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
    let damps = 1.0 + 2.0 * (0.0f64).max(((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0) + cs;
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = DVector::from_column_slice(start);
    let mut sigma = if seeded { 0.3 } else { 1.0 };
    let mut pc = DVector::<f64>::zeros(n);
    let mut ps = DVector::<f64>::zeros(n);
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut basis = DMatrix::<f64>::identity(n, n);
    let mut scales = DVector::<f64>::from_element(n, 1.0);
    let mut inv_sqrt = DMatrix::<f64>::identity(n, n);
    let mut eigen_age = 0usize;
    let eigen_every = ((lambda as f64) / ((c1 + cmu) * nf * 10.0)).max(1.0) as usize;
    let mut generation = 0usize;

    while !tracker.borrow().stopped() {
        generation += 1;
        let mut pop: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
            let y = &basis * scales.component_mul(&z);
            let x = &mean + sigma * &y;
            let f = tracker.borrow_mut().eval(x.as_slice());
            pop.push((f, x, y));
        }
        if tracker.borrow().stopped() {
            break;
        }
        pop.sort_by(|a, b| a.0.total_cmp(&b.0));

        let old_mean = mean.clone();
        let mut y_w = DVector::<f64>::zeros(n);
        for (w, (_, _, y)) in weights.iter().zip(&pop) {
            y_w += *w * y;
        }
        mean = &old_mean + sigma * &y_w;

        ps = (1.0 - cs) * &ps + (cs * (2.0 - cs) * mueff).sqrt() * (&inv_sqrt * &y_w);
        let ps_norm = ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - cs).powi(2 * generation as i32)).sqrt() / chi_n
            < 1.4 + 2.0 / (nf + 1.0);
        let hsig_f = if hsig { 1.0 } else { 0.0 };
        pc = (1.0 - cc) * &pc + hsig_f * (cc * (2.0 - cc) * mueff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (w, (_, _, y)) in weights.iter().zip(&pop) {
            rank_mu += *w * y * y.transpose();
        }
        cov = (1.0 - c1 - cmu) * &cov
            + c1 * (&pc * pc.transpose() + (1.0 - hsig_f) * cc * (2.0 - cc) * &cov)
            + cmu * rank_mu;
        sigma *= ((cs / damps) * (ps_norm / chi_n - 1.0)).exp();

        eigen_age += 1;
        if eigen_age >= eigen_every {
            eigen_age = 0;
            cov = (&cov + cov.transpose()) * 0.5;
            let eig = SymmetricEigen::new(cov.clone());
            basis = eig.eigenvectors;
            scales = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
            let inv = scales.map(|s| 1.0 / s);
            inv_sqrt = &basis * DMatrix::from_diagonal(&inv) * basis.transpose();
        }

        let spread = sigma * scales.max();
        if !spread.is_finite() || spread < 1e-13 {
            break;
        }
    }
}
