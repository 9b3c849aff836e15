//! Checks that a circuit implements its target, independent of the distance
//! the optimizer minimized.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::circuit::CircuitStructure;
use crate::error::{Error, Result};
use crate::gates::{crz_matrix, embed_gate, u3_matrix, U3Params};
use crate::matrix::{hs_distance, ComplexMatrix, Unitary};
use crate::optimizer::derive_seed;

/// Added to every probability before taking log-ratios.
pub const KL_SMOOTHING: f64 = 1e-30;

const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch("state vector is empty".into()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidConfig(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Uniformly random pure state: normalized complex Gaussian vector.
    pub fn random(dim: usize, rng: &mut impl Rng) -> Self {
        let mut amps: Vec<Complex64> = (0..dim.max(1))
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        Self { amplitudes: amps }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Computational-basis measurement distribution.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// `KL(p || q)` after adding [`KL_SMOOTHING`] to every cell.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions have {} and {} cells",
            p.len(),
            q.len()
        )));
    }
    let kl: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let (a, b) = (a + KL_SMOOTHING, b + KL_SMOOTHING);
            a * (a / b).ln()
        })
        .sum();
    // Rounding can leave a tiny negative sum for equal distributions.
    Ok(kl.max(0.0))
}

/// Worst-case KL divergence between the output distributions of `u` and
/// `target` over `trials` random input states.
pub fn max_kl_divergence(u: &Unitary, target: &Unitary, trials: usize, rng_seed: u64) -> Result<f64> {
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "circuit is {}-dimensional but the target is {}-dimensional",
            u.dim(),
            target.dim()
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let worst = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, trial as u64));
            let psi = StateVector::random(u.dim(), &mut rng);
            let p = probabilities(&u.apply(psi.amplitudes())?);
            let q = probabilities(&target.apply(psi.amplitudes())?);
            kl_divergence(&p, &q)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst)
}

/// [`max_kl_divergence`] for a structure instantiated with `params`.
pub fn verify_circuit(
    structure: &CircuitStructure,
    params: &[f64],
    target: &Unitary,
    trials: usize,
    rng_seed: u64,
) -> Result<f64> {
    let u = structure.evaluate(params)?;
    max_kl_divergence(&u, target, trials, rng_seed)
}

fn probabilities(amps: &[Complex64]) -> Vec<f64> {
    amps.iter().map(|a| a.norm_sqr()).collect()
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the R diagonal
/// made real positive.
pub fn haar_random_unitary(dim: usize, rng_seed: u64) -> Result<Unitary> {
    if dim == 0 {
        return Err(Error::DimensionMismatch("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    // cols[j] is column j of the Ginibre matrix.
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    // Modified Gram-Schmidt, run twice for orthogonality at rounding level.
    // The resulting R has a positive real diagonal, which is the phase
    // correction that makes Q Haar distributed.
    for j in 0..dim {
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let qk = &done[k];
                let proj: Complex64 = qk.iter().zip(rest[0].iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, q) in rest[0].iter_mut().zip(qk) {
                    *x -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateFit("rank-deficient Ginibre sample".into()));
        }
        for x in &mut cols[j] {
            *x /= norm;
        }
    }
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * dim + j] = v;
        }
    }
    Unitary::new(ComplexMatrix::new(dim, dim, data)?)
}

/// A unitary close to the identity: two layers of `u3` on every wire and
/// `crz` on neighbouring wires, all angles drawn from `Normal(0, scale)`.
/// The distance to the identity goes to zero with `scale`.
pub fn near_identity_unitary(num_qubits: usize, scale: f64, rng: &mut impl Rng) -> Result<Unitary> {
    if num_qubits == 0 {
        return Err(Error::InvalidQubits("at least one qubit is required".into()));
    }
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::InvalidConfig(format!("perturbation scale {scale} is invalid")));
    }
    let mut angle = || scale * rng.sample::<f64, _>(StandardNormal);
    let mut v = Unitary::identity(1 << num_qubits);
    for _ in 0..2 {
        for w in 0..num_qubits {
            let g = u3_matrix(U3Params::new(angle(), angle(), angle()));
            v = embed_gate(&g, &[w], num_qubits)?.matmul(&v)?;
        }
        for w in 1..num_qubits {
            let g = crz_matrix(angle());
            v = embed_gate(&g, &[w - 1, w], num_qubits)?.matmul(&v)?;
        }
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KLReport {
    /// Random input states evaluated in total.
    pub samples: usize,
    pub max_kl: f64,
    pub max_distance: f64,
    /// `(hs_distance, worst-case KL)` per unitary pair.
    pub pairs: Vec<(f64, f64)>,
}

impl KLReport {
    pub const HEADER: &'static str = "distance,max_kl";

    /// Comma-separated `distance,max_kl` rows with a header line.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for (d, kl) in &self.pairs {
            let _ = writeln!(out, "{d:e},{kl:e}");
        }
        out
    }

    pub fn spearman(&self) -> f64 {
        let (d, kl): (Vec<f64>, Vec<f64>) = self.pairs.iter().copied().unzip();
        spearman_rank_correlation(&d, &kl)
    }
}

/// Measures how worst-case KL divergence tracks distance: each pair is a
/// Haar-random `U` against `U V` with `V` near the identity, cycling through
/// `scales`.
pub fn threshold_study(
    num_qubits: usize,
    num_pairs: usize,
    scales: &[f64],
    states_per_pair: usize,
    rng_seed: u64,
) -> Result<KLReport> {
    if scales.is_empty() || scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidConfig("perturbation scales must be positive".into()));
    }
    if num_qubits == 0 {
        return Err(Error::InvalidQubits("at least one qubit is required".into()));
    }
    let dim = 1 << num_qubits;
    let pairs = (0..num_pairs)
        .into_par_iter()
        .map(|i| {
            let pair_seed = derive_seed(rng_seed, i as u64);
            let u = haar_random_unitary(dim, derive_seed(pair_seed, 0))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(pair_seed, 1));
            let v = near_identity_unitary(num_qubits, scales[i % scales.len()], &mut rng)?;
            let uv = u.matmul(&v)?;
            let distance = hs_distance(&uv, &u)?;
            let kl = if states_per_pair == 0 {
                0.0
            } else {
                max_kl_divergence(&uv, &u, states_per_pair, derive_seed(pair_seed, 2))?
            };
            Ok((distance, kl))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KLReport {
        samples: num_pairs * states_per_pair,
        max_kl: pairs.iter().map(|p| p.1).fold(0.0, f64::max),
        max_distance: pairs.iter().map(|p| p.0).fold(0.0, f64::max),
        pairs,
    })
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // Ties share the average of their 1-based ranks.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// Returns NaN for fewer than two points or constant input.
pub fn spearman_rank_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(&xs[..n]), ranks(&ys[..n]));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_unitaries_have_no_divergence() {
        let u = haar_random_unitary(8, 5).unwrap();
        assert!(max_kl_divergence(&u, &u, 50, 1).unwrap() <= 1e-20);
    }

    #[test]
    fn haar_samples_are_unitary() {
        for seed in 0..100 {
            let u = haar_random_unitary(8, seed).unwrap();
            assert!(u.matrix().is_unitary(1e-10).unwrap());
            for j in 0..8 {
                let norm: f64 = (0..8).map(|i| u.matrix().get(i, j).norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
        let p = haar_random_unitary(1, 3).unwrap();
        assert!((p.matrix().get(0, 0).norm() - 1.0).abs() < 1e-15);
        assert!(haar_random_unitary(0, 0).is_err());
    }

    #[test]
    fn kl_examples() {
        let p = [0.5, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let q = [0.25, 0.75];
        let expect = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((kl_divergence(&p, &q).unwrap() - expect).abs() < 1e-15);
        // Zero cells stay finite.
        assert!(kl_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap().is_finite());
        assert!(kl_divergence(&p, &[1.0]).is_err());
    }

    #[test]
    fn state_vector_checks_norm() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(StateVector::new(vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)]).is_ok());
        assert!(StateVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = StateVector::random(16, &mut rng);
        assert!(StateVector::new(s.amplitudes().to_vec()).is_ok());
        assert!((s.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman_rank_correlation(&x, &[10.0, 20.0, 25.0, 100.0]) - 1.0).abs() < 1e-15);
        assert!((spearman_rank_correlation(&x, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman_rank_correlation(&[1.0], &[1.0]).is_nan());
    }

    #[test]
    fn near_identity_shrinks_with_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let id = Unitary::identity(8);
        let big = hs_distance(&near_identity_unitary(3, 1e-1, &mut rng).unwrap(), &id).unwrap();
        let small = hs_distance(&near_identity_unitary(3, 1e-6, &mut rng).unwrap(), &id).unwrap();
        assert!(small < 1e-9 && small < big);
    }

    #[test]
    fn study_is_reproducible() {
        let a = threshold_study(2, 6, &[1e-2, 1e-4], 10, 77).unwrap();
        let b = threshold_study(2, 6, &[1e-2, 1e-4], 10, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples, 60);
        assert_eq!(a.max_kl, a.pairs.iter().map(|p| p.1).fold(0.0, f64::max));
        assert!(a.to_delimited().starts_with("distance,max_kl\n"));
        assert_eq!(a.to_delimited().lines().count(), 7);
        assert!(threshold_study(2, 1, &[], 1, 0).is_err());
        assert!(threshold_study(2, 1, &[-1.0], 1, 0).is_err());
    }
}
