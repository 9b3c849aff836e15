//! Benchmark-level acceptance run. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsynth::fixtures::{hhl, qft, structure_from_placements, toffoli};
use qsynth::gates::{decompose_u3, u3_matrix, GateSet, TwoQubitKind, U3Params};
use qsynth::matrix::{hs_distance, ComplexMatrix, Unitary};
use qsynth::optimizer::OptimizerKind;
use qsynth::search::{synthesize, synthesize_bfs, SearchConfig, SearchNode, SearchResult};
use qsynth::topology::Topology;
use qsynth::verification::{haar_random_unitary, max_kl_divergence};

mod common;
use common::{all_sequences, best_distance};

const EPSILON: f64 = 1e-10;
const KL_TRIALS: usize = 1000;

struct Solved {
    label: String,
    target: Unitary,
    node: SearchNode,
}

#[derive(Default)]
struct Run {
    solved: Vec<Solved>,
    failures: usize,
}

impl Run {
    fn report(&mut self, id: &str, pass: bool, detail: String, took: Duration) {
        if !pass {
            self.failures += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id}: {detail} [{:.1}s]", took.as_secs_f64());
    }

    fn keep(&mut self, label: &str, target: &Unitary, r: &SearchResult) -> Option<usize> {
        let node = r.solution.clone()?;
        let n = node.cnot_count();
        self.solved.push(Solved {
            label: label.to_string(),
            target: target.clone(),
            node,
        });
        Some(n)
    }
}

fn count(n: Option<usize>) -> String {
    n.map_or("none".into(), |n| n.to_string())
}

fn within(n: Option<usize>, limit: usize) -> bool {
    n.is_some_and(|n| n <= limit)
}

fn run(target: &Unitary, topo: &Topology, seed: u64) -> SearchResult {
    let cfg = SearchConfig {
        rng_seed: seed,
        ..SearchConfig::default()
    };
    synthesize(target, topo, &GateSet::cnot(), &cfg).expect("search")
}

fn qft2(run_: &mut Run) {
    let t = Instant::now();
    let target = qft(2);
    let r = run(&target, &Topology::line(2).unwrap(), 0);
    let n = run_.keep("qft2/line", &target, &r);
    let d = r.solution.as_ref().map_or(f64::NAN, |s| s.distance);
    run_.report("1", n == Some(3) && d < EPSILON, format!("qft2 on line(2): {} CNOTs, distance {d:e}", count(n)), t.elapsed());
}

fn random_su4(run_: &mut Run) {
    let t = Instant::now();
    let topo = Topology::line(2).unwrap();
    let cfg = SearchConfig {
        delta: Some(3),
        ..SearchConfig::default()
    };
    let mut worst_cnots = 0;
    let mut worst_distance: f64 = 0.0;
    let mut solved = 0;
    for k in 0..20 {
        let target = haar_random_unitary(4, 1000 + k).unwrap();
        let r = synthesize(&target, &topo, &GateSet::cnot(), &cfg).expect("search");
        if let Some(n) = run_.keep(&format!("su4/{k}"), &target, &r) {
            solved += 1;
            worst_cnots = worst_cnots.max(n);
            worst_distance = worst_distance.max(r.solution.unwrap().distance);
        }
    }
    let pass = solved == 20 && worst_cnots <= 3 && worst_distance < EPSILON;
    run_.report(
        "2",
        pass,
        format!("{solved}/20 Haar SU(4) solved, max {worst_cnots} CNOTs, max distance {worst_distance:e}"),
        t.elapsed(),
    );
}

fn toffoli_runs(run_: &mut Run) {
    let t = Instant::now();
    let target = toffoli();
    let tri: Vec<Option<usize>> = (0..2)
        .map(|seed| {
            let r = run(&target, &Topology::triangle(), seed);
            run_.keep(&format!("toffoli/triangle/{seed}"), &target, &r)
        })
        .collect();
    let best_tri = tri.iter().flatten().min().copied();
    let line = run(&target, &Topology::line(3).unwrap(), 0);
    let line_n = run_.keep("toffoli/line", &target, &line);
    run_.report(
        "3",
        within(best_tri, 7) && within(line_n, 9),
        format!(
            "toffoli triangle best-of-2 {} CNOTs (runs {}, {}), line {} CNOTs",
            count(best_tri),
            count(tri[0]),
            count(tri[1]),
            count(line_n)
        ),
        t.elapsed(),
    );
}

fn qft3(run_: &mut Run) -> Duration {
    let t = Instant::now();
    let target = qft(3);
    let line = run(&target, &Topology::line(3).unwrap(), 0);
    let astar_time = line.wall_time;
    let line_n = run_.keep("qft3/line", &target, &line);
    let tri = run(&target, &Topology::triangle(), 0);
    let tri_n = run_.keep("qft3/triangle", &target, &tri);
    run_.report(
        "4",
        within(line_n, 9) && within(tri_n, 8),
        format!("qft3 line {} CNOTs, triangle {} CNOTs", count(line_n), count(tri_n)),
        t.elapsed(),
    );
    astar_time
}

fn hhl_run(run_: &mut Run) {
    let t = Instant::now();
    let target = hhl();
    let r = run(&target, &Topology::line(3).unwrap(), 0);
    let n = run_.keep("hhl/line", &target, &r);
    run_.report("3 (hhl)", within(n, 4), format!("hhl on line(3): {} CNOTs (limit 4)", count(n)), t.elapsed());
}

fn quality(run_: &mut Run) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut fine = 0;
    for s in &run_.solved {
        let u = s.node.structure.evaluate(&s.node.params).unwrap();
        let d = hs_distance(&u, &s.target).unwrap();
        worst = worst.max(d);
        if d <= 1e-12 {
            fine += 1;
        }
    }
    let total = run_.solved.len();
    let pass = total > 0 && worst <= EPSILON && 2 * fine >= total;
    run_.report(
        "5",
        pass,
        format!("{total} solutions re-evaluated, worst {worst:e}, {fine}/{total} at or below 1e-12"),
        t.elapsed(),
    );
}

fn kl(run_: &mut Run) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_label = String::new();
    for (i, s) in run_.solved.iter().enumerate() {
        let u = s.node.structure.evaluate(&s.node.params).unwrap();
        let k = max_kl_divergence(&u, &s.target, KL_TRIALS, 77 + i as u64).unwrap();
        if k > worst {
            worst = k;
            worst_label = s.label.clone();
        }
    }
    run_.report(
        "6",
        !run_.solved.is_empty() && worst <= 1e-8,
        format!("max KL over {KL_TRIALS} states per solution {worst:e} ({worst_label})"),
        t.elapsed(),
    );
}

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.max_abs_diff(b).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
    let data = (0..r * c)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexMatrix::new(r, c, data).unwrap()
}

fn prop_linear_algebra() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..50).all(|_| {
        let a = random_matrix(&mut rng, 4, 3);
        let b = random_matrix(&mut rng, 3, 2);
        let mut naive = vec![Complex64::new(0.0, 0.0); 8];
        let mut kron = vec![Complex64::new(0.0, 0.0); 72];
        for i in 0..4 {
            for j in 0..2 {
                naive[i * 2 + j] = (0..3).map(|k| a.get(i, k) * b.get(k, j)).sum();
            }
        }
        for i in 0..4 {
            for k in 0..3 {
                for j in 0..3 {
                    for l in 0..2 {
                        kron[(i * 3 + j) * 6 + k * 2 + l] = a.get(i, k) * b.get(j, l);
                    }
                }
            }
        }
        let naive = ComplexMatrix::new(4, 2, naive).unwrap();
        let kron = ComplexMatrix::new(12, 6, kron).unwrap();
        max_diff(&a.matmul(&b).unwrap(), &naive) <= 1e-12 && max_diff(&a.kron(&b), &kron) <= 1e-12
    })
}

fn prop_phase() -> bool {
    (0..50).all(|s| {
        let u = haar_random_unitary(8, s).unwrap();
        hs_distance(&u, &u.with_global_phase(s as f64 * 0.37)).unwrap() <= 1e-12
    })
}

fn prop_decompose() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    (0..1000).all(|_| {
        let p = U3Params::new(rng.gen_range(-7.0..7.0), rng.gen_range(-7.0..7.0), rng.gen_range(-7.0..7.0));
        let product = decompose_u3(p)
            .iter()
            .fold(Unitary::identity(2), |acc, r| acc.matmul(&r.matrix()).unwrap());
        hs_distance(&product, &u3_matrix(p)).unwrap() <= 1e-10
    })
}

fn cmaes_serial() -> SearchConfig {
    SearchConfig {
        parallelism: 1,
        optimizer: OptimizerKind::CmaEs,
        ..SearchConfig::default()
    }
}

fn prop_reconstruction() -> bool {
    let gs = GateSet::cnot();
    let topo = Topology::line(3).unwrap();
    let placements = topo.placements(TwoQubitKind::Cnot, false);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    (0..=2).flat_map(|d| all_sequences(&placements, d)).all(|seq| {
        let s = structure_from_placements(3, &seq, &gs).unwrap();
        let x: Vec<f64> = (0..s.param_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let target = s.evaluate(&x).unwrap();
        let r = synthesize_bfs(&target, &topo, &gs, &cmaes_serial()).unwrap();
        within(r.cnot_count(), seq.len())
    })
}

fn prop_uniform_cost() -> bool {
    let gs = GateSet::cnot();
    let topo = Topology::line(2).unwrap();
    let placements = topo.placements(TwoQubitKind::Cnot, true);
    let cfg = SearchConfig {
        both_orientations: true,
        ..cmaes_serial()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    (0..=2).flat_map(|d| all_sequences(&placements, d)).all(|seq| {
        let s = structure_from_placements(2, &seq, &gs).unwrap();
        let x: Vec<f64> = (0..s.param_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let target = s.evaluate(&x).unwrap();
        let Some(found) = synthesize_bfs(&target, &topo, &gs, &cfg).unwrap().cnot_count() else {
            return false;
        };
        found <= seq.len()
            && (0..found).flat_map(|d| all_sequences(&placements, d)).all(|other| {
                let cand = structure_from_placements(2, &other, &gs).unwrap();
                best_distance(&cand, &target, 5) >= EPSILON
            })
    })
}

fn prop_beam() -> bool {
    let gs = GateSet::cnot();
    let topo = Topology::line(3).unwrap();
    let placements = topo.placements(TwoQubitKind::Cnot, false);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    (0..3).all(|_| {
        let seq: Vec<_> = (0..3).map(|_| placements[rng.gen_range(0..placements.len())]).collect();
        let s = structure_from_placements(3, &seq, &gs).unwrap();
        let x: Vec<f64> = (0..s.param_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let target = s.evaluate(&x).unwrap();
        let narrow = synthesize(&target, &topo, &gs, &SearchConfig::default()).unwrap();
        let wide = synthesize(&target, &topo, &gs, &SearchConfig { beam_width: 3, ..SearchConfig::default() }).unwrap();
        match (narrow.cnot_count(), wide.cnot_count()) {
            (Some(n), Some(w)) => w <= n,
            _ => false,
        }
    })
}

fn prop_determinism() -> bool {
    let target = qft(2);
    let topo = Topology::line(2).unwrap();
    let cfg = SearchConfig { rng_seed: 42, ..SearchConfig::default() };
    let a = synthesize(&target, &topo, &GateSet::cnot(), &cfg).unwrap();
    let b = synthesize(&target, &topo, &GateSet::cnot(), &SearchConfig { parallelism: 1, ..cfg }).unwrap();
    a.solution == b.solution && a.trace.len() == b.trace.len()
}

fn properties(run_: &mut Run) {
    let t = Instant::now();
    let checks: [(&str, fn() -> bool); 7] = [
        ("matmul/kron oracles", prop_linear_algebra),
        ("phase invariance", prop_phase),
        ("u3 decomposition", prop_decompose),
        ("depth-2 reconstruction", prop_reconstruction),
        ("uniform-cost optimality", prop_uniform_cost),
        ("beam never worse", prop_beam),
        ("determinism", prop_determinism),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, f)| !f()).map(|(n, _)| *n).collect();
    let detail = if failed.is_empty() {
        format!("{}/{} property checks hold", checks.len(), checks.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    run_.report("7", failed.is_empty(), detail, t.elapsed());
}

fn bfs_ordering(run_: &mut Run, astar_time: Duration) {
    let t = Instant::now();
    let target = qft(3);
    // A breadth-first run still going at twice the A* time is slower.
    let cfg = SearchConfig {
        time_limit: Some(astar_time * 2),
        ..SearchConfig::default()
    };
    let r = synthesize_bfs(&target, &Topology::line(3).unwrap(), &GateSet::cnot(), &cfg).unwrap();
    let outcome = if r.timed_out {
        format!("unfinished after {:.1}s", r.wall_time.as_secs_f64())
    } else {
        format!("{:.1}s ({} CNOTs)", r.wall_time.as_secs_f64(), count(r.cnot_count()))
    };
    run_.report(
        "8",
        r.timed_out || r.wall_time > astar_time,
        format!(
            "qft3 on line(3): breadth-first {outcome} vs A* {:.1}s; other items excluded",
            astar_time.as_secs_f64()
        ),
        t.elapsed(),
    );
}

fn main() {
    // Test enumeration (`cargo test -- --list`) should not start the full run.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut r = Run::default();
    qft2(&mut r);
    random_su4(&mut r);
    toffoli_runs(&mut r);
    hhl_run(&mut r);
    let astar = qft3(&mut r);
    quality(&mut r);
    kl(&mut r);
    properties(&mut r);
    bfs_ordering(&mut r, astar);
    println!("acceptance: {} failed", r.failures);
    if r.failures > 0 {
        std::process::exit(1);
    }
}
