#![allow(dead_code)]

use qsynth::circuit::CircuitStructure;
use qsynth::matrix::Unitary;
use qsynth::optimizer::{multistart_minimize, ObjectiveSpec, OptimizerKind};
use qsynth::search::distance_objective;

pub fn all_sequences(placements: &[(usize, usize)], depth: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![vec![]];
    for _ in 0..depth {
        out = out
            .into_iter()
            .flat_map(|s| {
                placements.iter().map(move |&p| {
                    let mut t = s.clone();
                    t.push(p);
                    t
                })
            })
            .collect();
    }
    out
}

/// Best distance reachable by a fixed structure, from several starts.
pub fn best_distance(s: &CircuitStructure, target: &Unitary, seed: u64) -> f64 {
    let plan = s.eval_plan();
    let f = distance_objective(&plan, target.matrix());
    let spec = ObjectiveSpec::new(s.param_count(), &f).with_budget(40_000).with_target(1e-12);
    multistart_minimize(&spec, None, 4, seed, OptimizerKind::CmaEs)
        .unwrap()
        .best_value
}

