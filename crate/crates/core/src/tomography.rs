//! Simulated two-qubit Pauli-basis tomography and correlation sweeps.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{fidelity, pure_to_density, DensityMatrix, Expectation, StateVector};
use crate::disentangler::{eigenstate, EigenIndex};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::optics::{noisy_pipeline, NoiseSpec};
use crate::spin_model::{CouplingParams, Pauli, PauliOperator, PauliString};

pub const DEFAULT_SHOTS: u64 = 10_000;

/// Measurement axes for qubit 0 and qubit 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MeasurementSetting {
    pub first: Pauli,
    pub second: Pauli,
}

impl MeasurementSetting {
    pub fn new(first: Pauli, second: Pauli) -> Result<Self> {
        if first == Pauli::I || second == Pauli::I {
            return Err(Error::InvalidArgument("measurement axes must be X, Y or Z".into()));
        }
        Ok(Self { first, second })
    }

    /// The nine settings `{X, Y, Z}²` in row-major order.
    pub fn all() -> Vec<MeasurementSetting> {
        const AXES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
        AXES.iter().flat_map(|&a| AXES.iter().map(move |&b| MeasurementSetting { first: a, second: b })).collect()
    }

    fn index(self) -> usize {
        let axis = |p: Pauli| match p {
            Pauli::X => 0,
            Pauli::Y => 1,
            _ => 2,
        };
        3 * axis(self.first) + axis(self.second)
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.first.symbol(), self.second.symbol())
    }
}

impl TryFrom<String> for MeasurementSetting {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        let chars: Vec<char> = s.chars().collect();
        let parse = |c: char| Pauli::from_symbol(c).ok_or_else(|| Error::InvalidArgument(format!("bad setting {s:?}")));
        if chars.len() != 2 {
            return Err(Error::InvalidArgument(format!("bad setting {s:?}")));
        }
        Self::new(parse(chars[0])?, parse(chars[1])?)
    }
}

impl From<MeasurementSetting> for String {
    fn from(m: MeasurementSetting) -> String {
        m.to_string()
    }
}

/// Coincidence counts for outcomes `++, +-, -+, --`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: MeasurementSetting,
    pub counts: [u64; 4],
    pub shots: u64,
}

impl CountRecord {
    pub fn new(setting: MeasurementSetting, counts: [u64; 4]) -> Self {
        Self { setting, counts, shots: counts.iter().sum() }
    }

    fn frequencies(&self) -> [f64; 4] {
        self.counts.map(|c| c as f64 / self.shots as f64)
    }
}

fn expectation_of(rho: &DensityMatrix, label: [Pauli; 2]) -> f64 {
    let op = PauliOperator::from_terms(2, [(1.0, PauliString::new(label.to_vec()))]).expect("two-qubit term");
    rho.expectation(&op).expect("two-qubit state")
}

/// Born probabilities of the four outcomes of a setting.
pub fn outcome_probabilities(rho: &DensityMatrix, setting: MeasurementSetting) -> Result<[f64; 4]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let (a, b) = (setting.first, setting.second);
    let ea = expectation_of(rho, [a, Pauli::I]);
    let eb = expectation_of(rho, [Pauli::I, b]);
    let eab = expectation_of(rho, [a, b]);
    let p = |sa: f64, sb: f64| ((1.0 + sa * ea + sb * eb + sa * sb * eab) / 4.0).max(0.0);
    Ok([p(1.0, 1.0), p(1.0, -1.0), p(-1.0, 1.0), p(-1.0, -1.0)])
}

/// Multinomial draw of `shots` outcomes, deterministic in `seed`.
pub fn simulate_counts(rho: &DensityMatrix, setting: MeasurementSetting, shots: u64, seed: u64) -> Result<CountRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let probs = outcome_probabilities(rho, setting)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(setting.index() as u64);
    let mut counts = [0u64; 4];
    let mut remaining = shots;
    let mut mass = 1.0;
    for k in 0..3 {
        let q = if mass > 0.0 { (probs[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, q).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(&mut rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= probs[k];
    }
    counts[3] = remaining;
    Ok(CountRecord { setting, counts, shots })
}

/// All nine settings, each with its own random stream.
pub fn simulate_all(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<Vec<CountRecord>> {
    MeasurementSetting::all().into_iter().map(|s| simulate_counts(rho, s, shots, seed)).collect()
}

/// Exact expectation of every two-qubit Pauli, keyed by `4 * a + b` with
/// `I, X, Y, Z = 0..4`.
pub type PauliVector = [f64; 16];

const PAULIS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

pub fn exact_pauli_vector(rho: &DensityMatrix) -> PauliVector {
    let mut v = [0.0; 16];
    for (a, &pa) in PAULIS.iter().enumerate() {
        for (b, &pb) in PAULIS.iter().enumerate() {
            v[4 * a + b] = expectation_of(rho, [pa, pb]);
        }
    }
    v
}

/// Pauli expectations estimated from counts; single-qubit marginals pool
/// every setting sharing that axis.
pub fn estimate_pauli_vector(records: &[CountRecord]) -> Result<PauliVector> {
    let mut by_setting: [Option<&CountRecord>; 9] = [None; 9];
    for r in records {
        if r.shots == 0 || r.counts.iter().sum::<u64>() != r.shots {
            return Err(Error::InvalidArgument(format!("record {} has inconsistent shots", r.setting)));
        }
        by_setting[r.setting.index()] = Some(r);
    }
    for s in MeasurementSetting::all() {
        if by_setting[s.index()].is_none() {
            return Err(Error::MissingSetting(s.to_string()));
        }
    }
    let rec = |a: usize, b: usize| by_setting[3 * (a - 1) + (b - 1)].expect("checked above");
    let mut v = [0.0; 16];
    v[0] = 1.0;
    for a in 1..4 {
        for b in 1..4 {
            let f = rec(a, b).frequencies();
            v[4 * a + b] = f[0] - f[1] - f[2] + f[3];
        }
        let (mut first, mut second, mut n) = (0.0, 0.0, 0.0);
        for other in 1..4 {
            let r = rec(a, other);
            first += (r.counts[0] + r.counts[1]) as f64 - (r.counts[2] + r.counts[3]) as f64;
            let r = rec(other, a);
            second += (r.counts[0] + r.counts[2]) as f64 - (r.counts[1] + r.counts[3]) as f64;
            n += rec(a, other).shots as f64;
        }
        v[4 * a] = first / n;
        let n2: f64 = (1..4).map(|o| rec(o, a).shots as f64).sum();
        v[a] = second / n2;
    }
    Ok(v)
}

/// `(1/4) Σ <P> P`.
pub fn linear_inversion(v: &PauliVector) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (a, &pa) in PAULIS.iter().enumerate() {
        for (b, &pb) in PAULIS.iter().enumerate() {
            let s = PauliString::new(vec![pa, pb]);
            for col in 0..4 {
                let (row, phase) = s.apply_to_index(col);
                m[(row, col)] += phase * (v[4 * a + b] / 4.0);
            }
        }
    }
    m
}

/// Euclidean projection of a real vector onto the probability simplex.
fn project_to_simplex(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    values.iter().map(|&x| (x - shift).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm.
pub fn project_to_density(m: &CMatrix) -> Result<DensityMatrix> {
    let (values, vectors) = linalg::eigh(m);
    let clipped = project_to_simplex(&values);
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for (k, &lam) in clipped.iter().enumerate() {
        if lam > 0.0 {
            let v = vectors.column(k);
            out += (v * v.adjoint()).map(|z| z * lam);
        }
    }
    DensityMatrix::from_matrix((&out + out.adjoint()).map(|z| z * 0.5))
}

/// Linear inversion followed by projection onto physical states.
pub fn reconstruct(records: &[CountRecord]) -> Result<DensityMatrix> {
    project_to_density(&linear_inversion(&estimate_pauli_vector(records)?))
}

/// Reconstruction from exact expectations.
pub fn reconstruct_exact(v: &PauliVector) -> Result<DensityMatrix> {
    project_to_density(&linear_inversion(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub w: f64,
    pub xx: f64,
    pub yy: f64,
    pub z_avg: f64,
    pub fidelity: f64,
}

/// `w = arctan(r)` for `r` in `{0, 1/16, 1/8, 1/4, 1/2, 1, 2, 4, 8, 16}`.
pub fn default_w_grid() -> Vec<f64> {
    [0.0, 1.0 / 16.0, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|r: &f64| r.atan()).collect()
}

fn correlations(rho: &DensityMatrix) -> (f64, f64, f64) {
    let xx = expectation_of(rho, [Pauli::X, Pauli::X]);
    let yy = expectation_of(rho, [Pauli::Y, Pauli::Y]);
    let z = 0.5 * (expectation_of(rho, [Pauli::Z, Pauli::I]) + expectation_of(rho, [Pauli::I, Pauli::Z]));
    (xx, yy, z)
}

/// Prepared state for `(idx, w)` and its ideal target.
pub fn prepared_state(idx: EigenIndex, w: f64, noise: Option<&NoiseSpec>) -> Result<(DensityMatrix, StateVector)> {
    let params = CouplingParams::from_angle(w)?;
    let target = eigenstate(&params, idx)?;
    let rho = match noise {
        None => pure_to_density(&target),
        Some(n) => noisy_pipeline(&params, idx, n)?.rho,
    };
    Ok((rho, target))
}

/// Exact correlations of the prepared state at each `w`.
pub fn correlation_sweep(idx: EigenIndex, w_grid: &[f64], noise: Option<&NoiseSpec>) -> Result<Vec<SweepRow>> {
    w_grid
        .iter()
        .map(|&w| {
            let (rho, target) = prepared_state(idx, w, noise)?;
            let (xx, yy, z_avg) = correlations(&rho);
            Ok(SweepRow { w, xx, yy, z_avg, fidelity: fidelity(&rho, &target)? })
        })
        .collect()
}

/// Row seed: `base ⊕ row`.
pub fn row_seed(base: u64, row: usize) -> u64 {
    base ^ row as u64
}

/// Sweep where each row is measured with `shots` per setting and reconstructed.
pub fn tomographic_sweep(
    idx: EigenIndex,
    w_grid: &[f64],
    noise: Option<&NoiseSpec>,
    shots: u64,
    seed: u64,
) -> Result<Vec<(SweepRow, DensityMatrix)>> {
    w_grid
        .par_iter()
        .enumerate()
        .map(|(row, &w)| {
            let (rho, target) = prepared_state(idx, w, noise)?;
            let est = reconstruct(&simulate_all(&rho, shots, row_seed(seed, row))?)?;
            let (xx, yy, z_avg) = correlations(&est);
            Ok((SweepRow { w, xx, yy, z_avg, fidelity: fidelity(&est, &target)? }, est))
        })
        .collect()
}
