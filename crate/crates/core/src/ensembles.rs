//! Physical realisations: the finite phase-gate circuit and the
//! piecewise-constant Ising Hamiltonian, plus exact and sampled twirls.
//!
//! Qubit `k` is bit `N-1-k` of a basis index (qubit 0 is the most
//! significant bit). Pairs `(k, l)`, `k < l`, are ordered lexicographically.
//!
//! Every random draw is a pure function of `(seed, draw index)`: draw `i`
//! uses a ChaCha8 stream seeded with `seed` and stream number `i`. Monte-Carlo
//! estimates are accumulated in fixed blocks of [`MC_BLOCK_SIZE`] draws and
//! blocks are merged in index order, so a parallel driver that computes
//! blocks concurrently reproduces the sequential result bit for bit.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{walsh_conjugate, walsh_hadamard, Dim, Operator, C64};
use crate::maps::{g_x_exact, g_z_exact, MomentMap};
use crate::math;

/// Nonzero coupling used by the Hamiltonian segments unless overridden.
pub const DEFAULT_J_STAR: f64 = 0.25;

/// Largest number of assignments [`enumerate_z_layers`] will produce.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Largest `N` for which exact moment tensors (`d⁴` entries) are averaged.
pub const EXACT_MOMENT_MAX_QUBITS: u32 = 4;

/// Draws per Monte-Carlo block.
pub const MC_BLOCK_SIZE: u64 = 1024;

/// Smallest sample count accepted by the Monte-Carlo estimators.
pub const MC_MIN_SAMPLES: u64 = 100;

fn n_pairs(n: u32) -> usize {
    let n = n as usize;
    n * n.saturating_sub(1) / 2
}

#[inline]
fn bit(index: usize, n: u32, qubit: usize) -> usize {
    (index >> (n as usize - 1 - qubit)) & 1
}

/// Lexicographic list of qubit pairs `(k, l)` with `k < l`.
pub fn qubit_pairs(n: u32) -> Vec<(usize, usize)> {
    let n = n as usize;
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for k in 0..n {
        for l in k + 1..n {
            out.push((k, l));
        }
    }
    out
}

/// `3^N · 2^{N(N-1)/2}`, saturating.
pub fn z_layer_count(n: u32) -> u128 {
    let mut c: u128 = 1;
    for _ in 0..n {
        c = c.saturating_mul(3);
    }
    for _ in 0..n_pairs(n) {
        c = c.saturating_mul(2);
    }
    c
}

/// One layer of single-qubit phase gates and controlled-phase gates.
///
/// Phases are stored as indices: single-qubit phase `2π s/3` with
/// `s ∈ {0,1,2}`, pair phase `π b` with `b ∈ {0,1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZLayerAssignment {
    single: Vec<u8>,
    pair: Vec<u8>,
}

impl ZLayerAssignment {
    pub fn from_indices(n_qubits: u32, single: Vec<u8>, pair: Vec<u8>) -> Result<Self> {
        if single.len() != n_qubits as usize {
            return Err(Error::DimensionMismatch {
                expected: n_qubits as usize,
                found: single.len(),
            });
        }
        if pair.len() != n_pairs(n_qubits) {
            return Err(Error::DimensionMismatch {
                expected: n_pairs(n_qubits),
                found: pair.len(),
            });
        }
        if single.iter().any(|&s| s > 2) || pair.iter().any(|&b| b > 1) {
            return Err(Error::domain("phase index outside the allowed set"));
        }
        Ok(ZLayerAssignment { single, pair })
    }

    pub fn zero(n_qubits: u32) -> Self {
        ZLayerAssignment {
            single: vec![0; n_qubits as usize],
            pair: vec![0; n_pairs(n_qubits)],
        }
    }

    pub fn n_qubits(&self) -> u32 {
        self.single.len() as u32
    }

    pub fn single_indices(&self) -> &[u8] {
        &self.single
    }

    pub fn pair_indices(&self) -> &[u8] {
        &self.pair
    }

    /// Single-qubit angles in radians, each in `{0, 2π/3, 4π/3}`.
    pub fn single_phases(&self) -> Vec<f64> {
        self.single.iter().map(|&s| 2.0 * PI * s as f64 / 3.0).collect()
    }

    /// Controlled-phase angles in radians, each in `{0, π}`.
    pub fn pair_phases(&self) -> Vec<f64> {
        self.pair.iter().map(|&b| PI * b as f64).collect()
    }
}

pub fn sample_z_layer<R: Rng + ?Sized>(n_qubits: u32, rng: &mut R) -> ZLayerAssignment {
    let single = (0..n_qubits).map(|_| rng.gen_range(0..3u8)).collect();
    let pair = (0..n_pairs(n_qubits)).map(|_| rng.gen_range(0..2u8)).collect();
    ZLayerAssignment { single, pair }
}

/// Every assignment exactly once, in mixed-radix order (last pair fastest).
pub fn enumerate_z_layers(n_qubits: u32) -> Result<Vec<ZLayerAssignment>> {
    let count = z_layer_count(n_qubits);
    if count > ENUMERATION_LIMIT {
        return Err(Error::size("Z-layer enumeration size", count, ENUMERATION_LIMIT));
    }
    let n = n_qubits as usize;
    let radices: Vec<u8> = core::iter::repeat(3)
        .take(n)
        .chain(core::iter::repeat(2).take(n_pairs(n_qubits)))
        .collect();
    let mut digits = vec![0u8; radices.len()];
    let mut out = Vec::with_capacity(count as usize);
    loop {
        out.push(ZLayerAssignment {
            single: digits[..n].to_vec(),
            pair: digits[n..].to_vec(),
        });
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < radices[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Diagonal entries of [`layer_unitary`].
pub fn layer_diagonal(layer: &ZLayerAssignment) -> Vec<C64> {
    let n = layer.n_qubits();
    let d = 1usize << n;
    let pairs = qubit_pairs(n);
    (0..d)
        .map(|idx| {
            // phase = (2π/3)·Σ s_k n_k + π·Σ b_kl n_k n_l, reduced as integers first
            let thirds: usize = (0..n as usize).map(|k| layer.single[k] as usize * bit(idx, n, k)).sum();
            let halves: usize = pairs
                .iter()
                .zip(&layer.pair)
                .map(|(&(k, l), &b)| b as usize * bit(idx, n, k) * bit(idx, n, l))
                .sum();
            let theta = 2.0 * PI * (thirds % 3) as f64 / 3.0 + PI * (halves % 2) as f64;
            math::cis(theta)
        })
        .collect()
}

/// The diagonal unitary `Π_k diag(1, e^{iφ_k}) · Π_{k<l} CPhase(θ_kl)`.
pub fn layer_unitary(layer: &ZLayerAssignment) -> Operator {
    Operator::from_diagonal(&layer_diagonal(layer))
}

fn check_layers(n_qubits: u32, count: usize) -> Result<()> {
    if count % 2 == 0 {
        return Err(Error::domain("the number of layers must be odd (2ℓ+1)"));
    }
    Dim::new(n_qubits).map(|_| ())
}

/// `(H^{⊗N} D_m) ··· (H^{⊗N} D_1)` for layers `D_1, …, D_m`, `m = 2ℓ+1`.
pub fn circuit_unitary(n_qubits: u32, layers: &[ZLayerAssignment]) -> Result<Operator> {
    check_layers(n_qubits, layers.len())?;
    let dim = Dim::new(n_qubits)?;
    let h = walsh_hadamard(dim);
    let mut u = Operator::identity(dim.d());
    for layer in layers {
        if layer.n_qubits() != n_qubits {
            return Err(Error::DimensionMismatch {
                expected: n_qubits as usize,
                found: layer.n_qubits() as usize,
            });
        }
        u = h.matmul(&scale_rows(&layer_diagonal(layer), &u));
    }
    Ok(u)
}

/// `D_m H^{⊗N} D_{m-1} ··· H^{⊗N} D_1`: the alternating form without the
/// trailing Hadamard layer.
pub fn alternating_unitary(n_qubits: u32, layers: &[ZLayerAssignment]) -> Result<Operator> {
    check_layers(n_qubits, layers.len())?;
    let dim = Dim::new(n_qubits)?;
    let h = walsh_hadamard(dim);
    let mut u = Operator::identity(dim.d());
    for (i, layer) in layers.iter().enumerate() {
        if i > 0 {
            u = h.matmul(&u);
        }
        u = scale_rows(&layer_diagonal(layer), &u);
    }
    Ok(u)
}

/// `diag(v) · u`.
fn scale_rows(v: &[C64], u: &Operator) -> Operator {
    let d = u.dim();
    Operator::from_fn(d, |r, c| v[r] * u[(r, c)])
}

/// Basis in which a Hamiltonian segment is diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentBasis {
    Z,
    X,
}

/// One π-duration segment of `H = -Σ B_i W_i - Σ_{i<j} J_ij W_i W_j`,
/// `W ∈ {Z, X}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSegment {
    pub basis: SegmentBasis,
    /// `B_i ∈ {0, 1/3, -1/3}`.
    pub fields: Vec<f64>,
    /// `J_ij ∈ {0, j_star}`, lexicographic over pairs.
    pub couplings: Vec<f64>,
}

impl HamiltonianSegment {
    pub fn n_qubits(&self) -> u32 {
        self.fields.len() as u32
    }
}

const FIELD_VALUES: [f64; 3] = [0.0, 1.0 / 3.0, -1.0 / 3.0];

pub fn sample_segment<R: Rng + ?Sized>(
    n_qubits: u32,
    basis: SegmentBasis,
    j_star: f64,
    rng: &mut R,
) -> HamiltonianSegment {
    let fields = (0..n_qubits).map(|_| FIELD_VALUES[rng.gen_range(0..3usize)]).collect();
    let couplings = (0..n_pairs(n_qubits))
        .map(|_| if rng.gen_range(0..2u8) == 1 { j_star } else { 0.0 })
        .collect();
    HamiltonianSegment {
        basis,
        fields,
        couplings,
    }
}

/// All `3^N · 2^{N(N-1)/2}` segments for one basis.
pub fn enumerate_segments(n_qubits: u32, basis: SegmentBasis, j_star: f64) -> Result<Vec<HamiltonianSegment>> {
    Ok(enumerate_z_layers(n_qubits)?
        .into_iter()
        .map(|a| HamiltonianSegment {
            basis,
            fields: a.single.iter().map(|&s| FIELD_VALUES[s as usize]).collect(),
            couplings: a.pair.iter().map(|&b| if b == 1 { j_star } else { 0.0 }).collect(),
        })
        .collect())
}

/// Eigenphases `e^{iπ(Σ B_k z_k + Σ J_kl z_k z_l)}`, `z = ±1`, of a segment
/// propagator in its own basis.
pub fn segment_diagonal(segment: &HamiltonianSegment) -> Vec<C64> {
    let n = segment.n_qubits();
    let d = 1usize << n;
    let pairs = qubit_pairs(n);
    let spin = |idx: usize, k: usize| 1.0 - 2.0 * bit(idx, n, k) as f64;
    (0..d)
        .map(|idx| {
            let mut energy = 0.0;
            for (k, b) in segment.fields.iter().enumerate() {
                energy += b * spin(idx, k);
            }
            for (&(k, l), j) in pairs.iter().zip(&segment.couplings) {
                energy += j * spin(idx, k) * spin(idx, l);
            }
            math::cis(PI * energy)
        })
        .collect()
}

/// `exp(-iπH)` for one segment. `H` is diagonal in the segment basis, so the
/// exponential is taken entrywise; the X branch is the Hadamard conjugate.
pub fn hamiltonian_segment(segment: &HamiltonianSegment) -> Operator {
    let u = Operator::from_diagonal(&segment_diagonal(segment));
    match segment.basis {
        SegmentBasis::Z => u,
        SegmentBasis::X => walsh_conjugate(&u),
    }
}

/// Segment counts and total evolution time for `ℓ` repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentSchedule {
    pub z_segments: u32,
    pub x_segments: u32,
    /// Total duration in units of π.
    pub duration_pi: u32,
}

/// `ℓ+1` Z-segments alternating with `ℓ` X-segments, starting and ending in
/// Z. The Hadamard layers between consecutive Z-layers of the circuit pair
/// up into X-diagonal layers, so this is the same unitary family.
pub fn segment_schedule(ell: u32) -> SegmentSchedule {
    SegmentSchedule {
        z_segments: ell + 1,
        x_segments: ell,
        duration_pi: 2 * ell + 1,
    }
}

/// Which distribution the diagonal layers are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    /// Phase gates from the finite sets `{0, 2π/3, 4π/3}` and `{0, π}`.
    Circuit,
    /// π-segments of the random Ising Hamiltonian.
    Hamiltonian,
    /// Independent uniform phases on every basis state.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_qubits: u32,
    pub ell: u32,
    pub kind: EnsembleKind,
    pub seed: u64,
    pub samples: u64,
    pub j_star: f64,
}

impl EnsembleSpec {
    pub fn new(n_qubits: u32, ell: u32, kind: EnsembleKind, seed: u64, samples: u64) -> Self {
        EnsembleSpec {
            n_qubits,
            ell,
            kind,
            seed,
            samples,
            j_star: DEFAULT_J_STAR,
        }
    }

    pub fn validate(&self) -> Result<Dim> {
        let dim = Dim::new(self.n_qubits)?;
        if self.ell == 0 {
            return Err(Error::domain("repetition count ell must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::domain("sample count must be at least 1"));
        }
        if !self.j_star.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(dim)
    }
}

/// RNG for draw `index` under `seed`.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One random diagonal layer (Z basis) from the spec's distribution.
pub fn sample_diagonal<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Vec<C64> {
    match spec.kind {
        EnsembleKind::Circuit => layer_diagonal(&sample_z_layer(spec.n_qubits, rng)),
        EnsembleKind::Hamiltonian => {
            segment_diagonal(&sample_segment(spec.n_qubits, SegmentBasis::Z, spec.j_star, rng))
        }
        EnsembleKind::Continuous => {
            let d = 1usize << spec.n_qubits;
            (0..d).map(|_| math::cis(2.0 * PI * rng.gen::<f64>())).collect()
        }
    }
}

/// Fresh segments `Z, X, Z, …, Z` (`2ℓ+1` in total), multiplied in time order.
pub fn hamiltonian_unitary<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Operator> {
    let dim = spec.validate()?;
    if spec.kind != EnsembleKind::Hamiltonian {
        return Err(Error::domain("hamiltonian_unitary needs the hamiltonian ensemble kind"));
    }
    let mut u = Operator::identity(dim.d());
    for slot in 0..2 * spec.ell + 1 {
        let basis = if slot % 2 == 0 {
            SegmentBasis::Z
        } else {
            SegmentBasis::X
        };
        let seg = sample_segment(spec.n_qubits, basis, spec.j_star, rng);
        u = hamiltonian_segment(&seg).matmul(&u);
    }
    Ok(u)
}

/// One draw of the full `ℓ`-repetition construction for the spec's kind:
/// the phase-gate circuit (with its trailing Hadamard layer), the segment
/// evolution, or alternating continuous Z/X-diagonal layers.
pub fn construction_unitary<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Operator> {
    let dim = spec.validate()?;
    let m = 2 * spec.ell + 1;
    match spec.kind {
        EnsembleKind::Circuit => {
            let layers: Vec<_> = (0..m).map(|_| sample_z_layer(spec.n_qubits, rng)).collect();
            circuit_unitary(spec.n_qubits, &layers)
        }
        EnsembleKind::Hamiltonian => hamiltonian_unitary(spec, rng),
        EnsembleKind::Continuous => {
            let mut u = Operator::identity(dim.d());
            for slot in 0..m {
                let layer = Operator::from_diagonal(&sample_diagonal(spec, rng));
                let layer = if slot % 2 == 0 { layer } else { walsh_conjugate(&layer) };
                u = layer.matmul(&u);
            }
            Ok(u)
        }
    }
}

/// Gates in the circuit for `ℓ` repetitions: per block `N` phase gates,
/// `N(N-1)/2` controlled phases and `N` Hadamards.
pub fn gate_count(n_qubits: u32, ell: u32) -> u64 {
    let n = n_qubits as u64;
    (2 * ell as u64 + 1) * (2 * n + n * n.saturating_sub(1) / 2)
}

/// Smallest `ℓ ≥ 1` with `(2/d^ℓ)(1 + 2/(d-1)) ≤ ε`.
pub fn ell_for_epsilon(n_qubits: u32, epsilon: f64) -> Result<u32> {
    let dim = Dim::new(n_qubits)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::domain("epsilon must be positive"));
    }
    let d = dim.d() as f64;
    let prefactor = 2.0 * (1.0 + 2.0 / (d - 1.0));
    let mut ell = 1u32;
    let mut scale = 1.0 / d;
    while prefactor * scale > epsilon {
        ell += 1;
        scale /= d;
    }
    Ok(ell)
}

fn exact_envelope(n_qubits: u32) -> Result<Dim> {
    let dim = Dim::new(n_qubits)?;
    if n_qubits > EXACT_MOMENT_MAX_QUBITS {
        return Err(Error::size(
            "qubits for an exact moment tensor",
            n_qubits,
            EXACT_MOMENT_MAX_QUBITS,
        ));
    }
    Ok(dim)
}

/// `w_{(i,j)} = v_i v_j`; the twirl tensor of one diagonal unitary is `w w†`.
fn pair_products(v: &[C64]) -> Vec<C64> {
    let d = v.len();
    let mut w = Vec::with_capacity(d * d);
    for &vi in v {
        for &vj in v {
            w.push(vi * vj);
        }
    }
    w
}

fn add_outer(acc: &mut [C64], w: &[C64]) {
    let n = w.len();
    for (r, &wr) in w.iter().enumerate() {
        let row = &mut acc[r * n..(r + 1) * n];
        for (a, wc) in row.iter_mut().zip(w) {
            *a += wr * wc.conj();
        }
    }
}

fn average_tensor(dim: Dim, diagonals: impl Iterator<Item = Vec<C64>>) -> Vec<C64> {
    let n = dim.pair_dim();
    let mut acc = vec![C64::new(0.0, 0.0); n * n];
    let mut count = 0usize;
    for v in diagonals {
        add_outer(&mut acc, &pair_products(&v));
        count += 1;
    }
    let inv = 1.0 / count as f64;
    acc.iter_mut().for_each(|z| *z *= inv);
    acc
}

/// Twirl tensor `E[v_i v_j v̄_k v̄_l]` of one circuit Z-layer, averaged
/// over all `3^N · 2^{N(N-1)/2}` assignments; row-major over `(ij, kl)`.
pub fn layer_moment_tensor(n_qubits: u32) -> Result<Vec<C64>> {
    let dim = exact_envelope(n_qubits)?;
    let layers = enumerate_z_layers(n_qubits)?;
    Ok(average_tensor(dim, layers.iter().map(layer_diagonal)))
}

/// Twirl tensor of one Z-basis Hamiltonian segment, averaged over all
/// field and coupling draws.
pub fn segment_moment_tensor(n_qubits: u32, j_star: f64) -> Result<Vec<C64>> {
    let dim = exact_envelope(n_qubits)?;
    let segs = enumerate_segments(n_qubits, SegmentBasis::Z, j_star)?;
    Ok(average_tensor(dim, segs.iter().map(segment_diagonal)))
}

/// Twirl tensor of a uniformly random diagonal unitary: 1 where
/// `{i, j} = {k, l}`, else 0.
pub fn diagonal_design_tensor(dim: Dim) -> Vec<C64> {
    let d = dim.d();
    let mut t = Vec::with_capacity(d * d * d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let hit = (i == k && j == l) || (i == l && j == k);
                    t.push(C64::new(if hit { 1.0 } else { 0.0 }, 0.0));
                }
            }
        }
    }
    t
}

/// `max |a - b|` over tensor entries.
pub fn tensor_deviation(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "tensor sizes differ");
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Exact two-copy twirl of one circuit Z-layer.
pub fn ensemble_moment_exact(n_qubits: u32) -> Result<MomentMap> {
    let dim = exact_envelope(n_qubits)?;
    MomentMap::schur_multiplier(dim, "G_layer", layer_moment_tensor(n_qubits)?)
}

/// Exact two-copy twirl of one Z-basis Hamiltonian segment.
pub fn segment_moment_exact(n_qubits: u32, j_star: f64) -> Result<MomentMap> {
    let dim = exact_envelope(n_qubits)?;
    MomentMap::schur_multiplier(dim, "G_segment", segment_moment_tensor(n_qubits, j_star)?)
}

/// Exact twirl of the whole `ℓ`-repetition construction, composed from
/// independent per-layer twirls.
pub fn construction_moment_exact(spec: &EnsembleSpec) -> Result<MomentMap> {
    let dim = spec.validate()?;
    let w = MomentMap::hadamard_conjugation(dim);
    match spec.kind {
        EnsembleKind::Circuit => {
            let block = w.compose(&ensemble_moment_exact(spec.n_qubits)?);
            Ok(block.power(2 * spec.ell + 1))
        }
        EnsembleKind::Hamiltonian => {
            let gz = segment_moment_exact(spec.n_qubits, spec.j_star)?;
            let gx = w.compose(&gz).compose(&w);
            Ok(gz.compose(&gx.compose(&gz).power(spec.ell)))
        }
        EnsembleKind::Continuous => {
            let gz = g_z_exact(dim);
            Ok(gz.compose(&g_x_exact(dim).compose(&gz).power(spec.ell)))
        }
    }
}

/// Running sums for a Monte-Carlo mean with per-entry standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    pub count: u64,
    pub sum: Vec<C64>,
    pub sum_sq: Vec<f64>,
}

impl Accumulator {
    pub fn new(len: usize) -> Self {
        Accumulator {
            count: 0,
            sum: vec![C64::new(0.0, 0.0); len],
            sum_sq: vec![0.0; len],
        }
    }

    /// Fold in `other`. Merging blocks in a fixed order makes the result
    /// independent of how blocks were scheduled.
    pub fn merge(&mut self, other: &Accumulator) {
        assert_eq!(self.sum.len(), other.sum.len());
        self.count += other.count;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.sum_sq.iter_mut().zip(&other.sum_sq).for_each(|(a, b)| *a += b);
    }

    fn push_outer(&mut self, w: &[C64]) {
        let n = w.len();
        for (r, &wr) in w.iter().enumerate() {
            for (c, wc) in w.iter().enumerate() {
                let x = wr * wc.conj();
                self.sum[r * n + c] += x;
                self.sum_sq[r * n + c] += x.norm_sqr();
            }
        }
        self.count += 1;
    }

    fn push_outer_of(&mut self, a: &[C64], b: &[C64]) {
        let n = b.len();
        for (r, &ar) in a.iter().enumerate() {
            for (c, bc) in b.iter().enumerate() {
                let x = ar * bc.conj();
                self.sum[r * n + c] += x;
                self.sum_sq[r * n + c] += x.norm_sqr();
            }
        }
    }

    pub fn mean(&self) -> Vec<C64> {
        let inv = 1.0 / self.count as f64;
        self.sum.iter().map(|z| z * inv).collect()
    }

    /// Largest standard error of the mean over all entries.
    pub fn max_std_error(&self) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let m = self.count as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let mean = s / m;
                let var = (q / m - mean.norm_sqr()).max(0.0) * m / (m - 1.0);
                math::sqrt(var / m)
            })
            .fold(0.0, f64::max)
    }
}

/// Number of [`MC_BLOCK_SIZE`] blocks covering `samples` draws.
pub fn block_count(samples: u64) -> u64 {
    samples.div_ceil(MC_BLOCK_SIZE)
}

fn block_range(samples: u64, block: u64) -> core::ops::Range<u64> {
    let start = block * MC_BLOCK_SIZE;
    start..samples.min(start + MC_BLOCK_SIZE)
}

fn mc_envelope(spec: &EnsembleSpec) -> Result<Dim> {
    let dim = spec.validate()?;
    if spec.samples < MC_MIN_SAMPLES {
        return Err(Error::domain("Monte-Carlo estimates need at least 100 samples"));
    }
    if spec.n_qubits > EXACT_MOMENT_MAX_QUBITS {
        return Err(Error::size(
            "qubits for a sampled moment tensor",
            spec.n_qubits,
            EXACT_MOMENT_MAX_QUBITS,
        ));
    }
    Ok(dim)
}

/// Sums over one block of single-layer draws.
pub fn moment_block(spec: &EnsembleSpec, block: u64) -> Result<Accumulator> {
    let dim = mc_envelope(spec)?;
    let n = dim.pair_dim();
    let mut acc = Accumulator::new(n * n);
    for index in block_range(spec.samples, block) {
        let mut rng = draw_rng(spec.seed, index);
        acc.push_outer(&pair_products(&sample_diagonal(spec, &mut rng)));
    }
    Ok(acc)
}

/// A sampled single-layer twirl.
#[derive(Debug, Clone)]
pub struct SampledMoment {
    pub map: MomentMap,
    /// Sample mean of the twirl tensor `E[v_i v_j v̄_k v̄_l]`, row-major over
    /// `(ij, kl)`; also the map's image of each product matrix unit.
    pub tensor: Vec<C64>,
    pub std_error: f64,
    pub samples: u64,
}

/// Combine block sums (given in block order) into an estimate.
pub fn finish_moment(spec: &EnsembleSpec, blocks: &[Accumulator]) -> Result<SampledMoment> {
    let dim = mc_envelope(spec)?;
    let n = dim.pair_dim();
    let mut total = Accumulator::new(n * n);
    for b in blocks {
        total.merge(b);
    }
    if total.count != spec.samples {
        return Err(Error::Contract {
            what: "Monte-Carlo block coverage",
            deviation: (total.count as f64 - spec.samples as f64).abs(),
        });
    }
    let tensor = total.mean();
    Ok(SampledMoment {
        map: MomentMap::schur_multiplier(dim, "G_sampled", tensor.clone())?,
        tensor,
        std_error: total.max_std_error(),
        samples: spec.samples,
    })
}

/// Sample average of `V⊗V ρ V†⊗V†` over single diagonal layers.
pub fn ensemble_moment_mc(spec: &EnsembleSpec) -> Result<SampledMoment> {
    let blocks = (0..block_count(spec.samples))
        .map(|b| moment_block(spec, b))
        .collect::<Result<Vec<_>>>()?;
    finish_moment(spec, &blocks)
}

/// Largest `N` for the full-construction probe estimator.
pub const CONSTRUCTION_MC_MAX_QUBITS: u32 = 3;

/// Sums over one block of full-construction draws, recording
/// `(U⊗U)|a⟩⟨b|(U⊗U)†` for each probe `(a, b)` of product basis indices.
/// Entries are laid out probe after probe, each a row-major `d² × d²` block.
pub fn construction_block(spec: &EnsembleSpec, probes: &[(usize, usize)], block: u64) -> Result<Accumulator> {
    let dim = construction_envelope(spec, probes)?;
    let dd = dim.pair_dim();
    let mut acc = Accumulator::new(probes.len() * dd * dd);
    for index in block_range(spec.samples, block) {
        let mut rng = draw_rng(spec.seed, index);
        let u = construction_unitary(spec, &mut rng)?;
        let column = |a: usize| -> Vec<C64> {
            let d = dim.d();
            let (a1, a2) = (a / d, a % d);
            let mut out = Vec::with_capacity(dd);
            for i in 0..d {
                for j in 0..d {
                    out.push(u[(i, a1)] * u[(j, a2)]);
                }
            }
            out
        };
        for (p, &(a, b)) in probes.iter().enumerate() {
            let mut part = Accumulator::new(dd * dd);
            part.push_outer_of(&column(a), &column(b));
            let off = p * dd * dd;
            for k in 0..dd * dd {
                acc.sum[off + k] += part.sum[k];
                acc.sum_sq[off + k] += part.sum_sq[k];
            }
        }
        acc.count += 1;
    }
    Ok(acc)
}

fn construction_envelope(spec: &EnsembleSpec, probes: &[(usize, usize)]) -> Result<Dim> {
    let dim = spec.validate()?;
    if spec.n_qubits > CONSTRUCTION_MC_MAX_QUBITS {
        return Err(Error::size(
            "qubits for the construction estimator",
            spec.n_qubits,
            CONSTRUCTION_MC_MAX_QUBITS,
        ));
    }
    let dd = dim.pair_dim();
    if probes.iter().any(|&(a, b)| a >= dd || b >= dd) {
        return Err(Error::domain("probe index outside the two-copy basis"));
    }
    Ok(dim)
}

/// Product-basis matrix units `|a⟩⟨b|` probed by default: a diagonal
/// pair, a swap-type coherence and two generic off-diagonal units.
pub fn default_probes(dim: Dim) -> Vec<(usize, usize)> {
    let d = dim.d();
    let dd = dim.pair_dim();
    let mut p = vec![(0, 0), (1, d), (d + 1, d + 1), (1, dd - 1)];
    p.sort_unstable();
    p.dedup();
    p
}

/// Sampled images of the probes under the full-construction twirl.
#[derive(Debug, Clone)]
pub struct SampledProbes {
    pub images: Vec<Operator>,
    pub std_error: f64,
    pub samples: u64,
}

pub fn finish_construction(
    spec: &EnsembleSpec,
    probes: &[(usize, usize)],
    blocks: &[Accumulator],
) -> Result<SampledProbes> {
    let dim = construction_envelope(spec, probes)?;
    let dd = dim.pair_dim();
    let mut total = Accumulator::new(probes.len() * dd * dd);
    for b in blocks {
        total.merge(b);
    }
    let mean = total.mean();
    let images = mean
        .chunks(dd * dd)
        .map(|c| Operator::from_row_major(dd, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledProbes {
        images,
        std_error: total.max_std_error(),
        samples: total.count,
    })
}

/// Direct Monte-Carlo estimate of the full construction's twirl on probes.
pub fn construction_twirl_mc(spec: &EnsembleSpec, probes: &[(usize, usize)]) -> Result<SampledProbes> {
    let blocks = (0..block_count(spec.samples))
        .map(|b| construction_block(spec, probes, b))
        .collect::<Result<Vec<_>>>()?;
    finish_construction(spec, probes, &blocks)
}

/// `|tr(U†V)|`, equal to `d` iff `U` and `V` agree up to a global phase.
pub fn phase_insensitive_overlap(u: &Operator, v: &Operator) -> f64 {
    u.hs_inner(v).norm()
}
