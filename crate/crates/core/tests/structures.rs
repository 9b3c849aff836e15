use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsynth::assembly::EmittedCircuit;
use qsynth::circuit::CircuitStructure;
use qsynth::fixtures::structure_from_placements;
use qsynth::gates::{embed_gate, u3_matrix, GateSet, TwoQubitKind, U3Params};
use qsynth::matrix::{hs_distance, Unitary};
use qsynth::optimizer::OptimizerKind;
use qsynth::search::{synthesize_bfs, SearchConfig};
use qsynth::topology::Topology;

fn random_structure(rng: &mut ChaCha8Rng) -> (CircuitStructure, Vec<f64>) {
    let q = rng.gen_range(2..=4);
    let gate_set = if rng.gen_bool(0.5) { GateSet::cnot() } else { GateSet::crz() }
        .with_control_simplification(rng.gen_bool(0.7));
    let placements = Topology::fully_connected(q)
        .unwrap()
        .placements(gate_set.two_qubit_kind, true);
    let depth = rng.gen_range(0..=6);
    let seq: Vec<(usize, usize)> = (0..depth).map(|_| placements[rng.gen_range(0..placements.len())]).collect();
    let s = structure_from_placements(q, &seq, &gate_set).unwrap();
    let x = (0..s.param_count()).map(|_| rng.gen_range(-4.0..4.0)).collect();
    (s, x)
}

#[test]
fn plan_matches_naive_evaluation_on_100_structures() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let (s, x) = random_structure(&mut rng);
        let naive = s.evaluate(&x).unwrap();
        let plan = s.eval_plan();
        let fast = plan.evaluate(&x).unwrap();
        let diff = naive.matrix().max_abs_diff(fast.matrix()).unwrap();
        assert!(diff <= 1e-12, "{:?}: {diff:e}", s.placements());
        assert!(plan.full_width_products() <= s.naive_full_width_products());
    }
}

#[test]
fn fan_out_and_depth_two_tree_is_complete() {
    let gs = GateSet::cnot();
    let topo = Topology::line(3).unwrap();
    let placements = topo.placements(TwoQubitKind::Cnot, false);
    let root = CircuitStructure::root(3).unwrap();
    let level1: Vec<CircuitStructure> = placements.iter().map(|&p| root.expand(p, &gs)).collect();
    assert_eq!(level1.len(), placements.len());
    let level2: Vec<CircuitStructure> = level1
        .iter()
        .flat_map(|s| placements.iter().map(move |&p| s.expand(p, &gs)))
        .collect();
    assert_eq!(level2.len(), placements.len().pow(2));
    for a in &placements {
        for b in &placements {
            let want = structure_from_placements(3, &[*a, *b], &gs).unwrap();
            assert_eq!(level2.iter().filter(|s| **s == want).count(), 1);
        }
    }
}

/// Every circuit of depth at most 2 in the tree is found again by
/// uniform-cost search from its own unitary, with no more CNOTs than it was
/// built with.
#[test]
fn depth_two_circuits_are_reconstructed() {
    let gs = GateSet::cnot();
    let topo = Topology::line(3).unwrap();
    let placements = topo.placements(TwoQubitKind::Cnot, false);
    let mut seqs: Vec<Vec<(usize, usize)>> = vec![vec![]];
    for &a in &placements {
        seqs.push(vec![a]);
        for &b in &placements {
            seqs.push(vec![a, b]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seq in seqs {
        let s = structure_from_placements(3, &seq, &gs).unwrap();
        let x: Vec<f64> = (0..s.param_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let target = s.evaluate(&x).unwrap();
        // Completeness of the tree is the point here; COBYLA stalls near 1e-8
        // on a few of these from a cold start, so use CMA-ES.
        let cfg = SearchConfig {
            parallelism: 1,
            optimizer: OptimizerKind::CmaEs,
            ..SearchConfig::default()
        };
        let r = synthesize_bfs(&target, &topo, &gs, &cfg).unwrap();
        let sol = r.solution.unwrap_or_else(|| panic!("{seq:?} not reconstructed"));
        assert!(sol.cnot_count() <= seq.len(), "{seq:?} -> {}", sol.cnot_count());
        assert!(sol.distance < 1e-10);
    }
}

#[test]
fn doubled_cnot_with_idle_middle_layer_cancels() {
    let gs = GateSet::cnot();
    let s = structure_from_placements(2, &[(0, 1), (0, 1)], &gs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut x: Vec<f64> = (0..s.param_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
    // Zero the single-qubit layer between the two CNOTs.
    let middle = &s.steps()[2];
    for v in &mut x[middle.param_offset..middle.param_offset + middle.param_arity()] {
        *v = 0.0;
    }
    let first = s.step_unitary(&s.steps()[0], &x).unwrap();
    let last = s.step_unitary(&s.steps()[4], &x).unwrap();
    let expect = last.matmul(&first).unwrap();
    assert!(s.evaluate(&x).unwrap().matrix().max_abs_diff(expect.matrix()).unwrap() <= 1e-12);
}

#[test]
fn root_with_rotations_matches_manual_product() {
    let s = CircuitStructure::root(3).unwrap();
    let x = [0.1, 0.2, 0.3, 1.1, -0.4, 2.0, -1.5, 0.7, 0.9];
    let mut expect = Unitary::identity(8);
    for w in 0..3 {
        let g = u3_matrix(U3Params::new(x[3 * w], x[3 * w + 1], x[3 * w + 2]));
        expect = embed_gate(&g, &[w], 3).unwrap().matmul(&expect).unwrap();
    }
    assert!(hs_distance(&s.evaluate(&x).unwrap(), &expect).unwrap() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn emission_round_trips(seed in 0u64..10_000, native in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, x) = random_structure(&mut rng);
        let c = EmittedCircuit::from_solution(&s, &x, native).unwrap();
        let back = EmittedCircuit::parse(&c.to_qasm()).unwrap();
        prop_assert_eq!(&back, &c);
        let d = hs_distance(&back.unitary().unwrap(), &s.evaluate(&x).unwrap()).unwrap();
        prop_assert!(d <= 1e-10, "distance {:e}", d);
        prop_assert_eq!(c.two_qubit_count(), s.cnot_count());
        if !native {
            prop_assert!(c.instructions.len() <= s.total_gate_bound());
        }
    }

    #[test]
    fn native_count_is_five_per_u3_minus_zero_rz(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = rng.gen_range(2..=3);
        let gs = GateSet::cnot();
        let placements = Topology::line(q).unwrap().placements(TwoQubitKind::Cnot, false);
        let depth = rng.gen_range(0..=4);
        let seq: Vec<_> = (0..depth).map(|_| placements[rng.gen_range(0..placements.len())]).collect();
        let s = structure_from_placements(q, &seq, &gs).unwrap();
        let x: Vec<f64> = (0..s.param_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let c = EmittedCircuit::from_solution(&s, &x, true).unwrap();
        prop_assert_eq!(c.instructions.len(), 5 * q + 10 * depth);
    }

    #[test]
    fn inherited_parameters_form_a_prefix(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, _) = random_structure(&mut rng);
        let gs = GateSet::cnot();
        let child = s.expand((0, 1), &gs);
        prop_assert_eq!(child.param_count(), s.param_count() + gs.expansion_param_count());
        prop_assert_eq!(&child.steps()[..s.steps().len()], s.steps());
    }
}
