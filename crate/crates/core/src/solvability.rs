//! Transpose symbols, the global-solvability gate λ_min^{>0} ≥ C⟨ξ⟩^{−k},
//! the block pseudoinverse solver and non-solvability witnesses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{geometric_split, interval_min, record_lows, Sample};
use crate::error::{Error, Result};
use crate::fourier::{Direction, DualIndex, FourierData, Group, SymbolBlock, SymbolMap};
use crate::linalg::{CMatrix, I, ZERO};
use crate::poincare::{lambdas, torus_samples};
use crate::spectral::{decompose, pseudoinverse_from, range_projector};

/// Largest decay exponent tried before decay counts as super-polynomial.
pub const K_MAX: u32 = 64;

/// Default relative tolerance for range membership and residuals.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

/// σ_{ᵗP}(ξ) = σ_P(ξ̄)ᵗ.
///
/// On tori ξ̄ = −ξ. On SU(2) the caller supplies a unitary J with
/// conj(ξ(x)) = J ξ(x) J*, and then σ_P(ξ̄) = J σ_P(ξ) J*.
pub fn transpose_symbol(sigma: &SymbolMap, index: &DualIndex, intertwiner: Option<&CMatrix>) -> Result<SymbolBlock> {
    let lookup = |i: &DualIndex| sigma.get(i).ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {i}")));
    let conj_block = match (index.conjugate(), intertwiner) {
        (Some(bar), _) => lookup(&bar)?.clone(),
        (None, Some(j)) => {
            let m = lookup(index)?;
            if j.rows() != m.rows() || !j.is_square() {
                return Err(Error::IncompatibleSymbol(format!("intertwiner at {index} has the wrong size")));
            }
            &(j * m) * &j.adjoint()
        }
        (None, None) => return Err(Error::UnsupportedConjugation(index.clone())),
    };
    Ok(SymbolBlock::new(index.clone(), conj_block.transpose()))
}

/// J = antidiag(1, −1, 1, …) of side 2ℓ+1, which satisfies
/// conj(σ_Y(ℓ)) = J σ_Y(ℓ) J* for every real field Y.
pub fn su2_conjugation_intertwiner(two_ell: u32) -> CMatrix {
    let n = two_ell as usize + 1;
    CMatrix::from_fn(n, n, |i, j| {
        if i + j == n - 1 {
            Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            ZERO
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPair {
    #[serde(flatten)]
    pub index: DualIndex,
    pub weight: f64,
    pub lambda_min_pos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub c: f64,
    pub k: u32,
    pub binding_index: DualIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessIndex {
    #[serde(flatten)]
    pub index: DualIndex,
    /// λ_min^{>0} < ⟨ξ⟩^{−n}.
    pub n: u32,
    pub weight: f64,
    pub lambda_min_pos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SolvabilityVerdict {
    EvidencePass { c: f64, k: u32 },
    EvidenceFail { witnesses: Vec<WitnessIndex> },
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub operator: String,
    pub group: String,
    pub range: String,
    #[serde(flatten)]
    pub verdict: SolvabilityVerdict,
    pub fit: Option<Fit>,
    /// Exponent fitted on the lower half of the weight range alone.
    pub k_head: Option<u32>,
    /// Decades by which the upper half undercuts the lower half at `k_head`.
    pub tail_drop_decades: Option<f64>,
    pub zero_block_count: u64,
    pub zero_blocks: Vec<DualIndex>,
    /// False when `pairs` holds only the lower envelope of a streamed scan.
    pub pairs_complete: bool,
    pub pairs: Vec<LambdaPair>,
}

impl SolvabilityReport {
    pub fn is_pass(&self) -> bool {
        matches!(self.verdict, SolvabilityVerdict::EvidencePass { .. })
    }

    pub fn is_fail(&self) -> bool {
        matches!(self.verdict, SolvabilityVerdict::EvidenceFail { .. })
    }

    pub fn with_operator(mut self, operator: impl Into<String>) -> Self {
        self.operator = operator.into();
        self
    }
}

/// Smallest k ≤ K_MAX with min over the upper half of λ·w^k at least half
/// the minimum over the lower half, the halves split at the geometric
/// midpoint of [lo, hi).
fn fit_exponent(samples: &[&Sample], lo: f64, hi: f64) -> Option<u32> {
    let split = geometric_split(lo, hi);
    if split <= lo || split >= hi {
        return Some(0);
    }
    (0..=K_MAX).find(|&k| {
        match (interval_min(samples, k as f64, lo, split), interval_min(samples, k as f64, split, hi)) {
            (Some((head, _)), Some((tail, _))) => tail >= head / 2.0,
            _ => true,
        }
    })
}

fn decide(operator: String, group: Group, range: String, samples: Vec<Sample>, zero_blocks: Vec<DualIndex>, zero_block_count: u64, complete: bool) -> SolvabilityReport {
    let mut report = SolvabilityReport {
        operator,
        group: group.tag(),
        range,
        verdict: SolvabilityVerdict::Vacuous,
        fit: None,
        k_head: None,
        tail_drop_decades: None,
        zero_block_count,
        zero_blocks,
        pairs_complete: complete,
        pairs: samples.iter().map(|s| LambdaPair { index: s.index.clone(), weight: s.weight, lambda_min_pos: s.value }).collect(),
    };
    if samples.is_empty() {
        return report;
    }
    let refs: Vec<&Sample> = samples.iter().collect();
    let lo = refs.iter().map(|s| s.weight).fold(f64::INFINITY, f64::min);
    let hi = refs.iter().map(|s| s.weight).fold(0.0, f64::max) * (1.0 + 1e-12);
    let split = geometric_split(lo, hi);
    let k_full = fit_exponent(&refs, lo, hi);
    let k_head = if split > lo && split < hi { fit_exponent(&refs, lo, split) } else { k_full };
    report.k_head = k_head;
    let drop = k_head.and_then(|kh| {
        let head = interval_min(&refs, kh as f64, lo, split)?.0;
        let tail = interval_min(&refs, kh as f64, split, hi)?.0;
        Some((head / tail).log10())
    });
    report.tail_drop_decades = drop;

    let fails = match (k_full, k_head) {
        (None, _) => true,
        (Some(kf), Some(kh)) => kf > kh && drop.map_or(false, |d| d > 2.0),
        (Some(_), None) => false,
    };
    if let Some(k) = k_full {
        let (c, i) = interval_min(&refs, k as f64, lo, hi).expect("non-empty");
        // ties go to the smallest index
        let binding = refs
            .iter()
            .filter(|s| s.value * s.weight.powf(k as f64) == c)
            .map(|s| &s.index)
            .min()
            .unwrap_or(&refs[i].index)
            .clone();
        report.fit = Some(Fit { c, k, binding_index: binding });
    }
    report.verdict = if fails {
        SolvabilityVerdict::EvidenceFail { witnesses: witness_indices(&samples) }
    } else {
        let fit = report.fit.as_ref().expect("pass has a fit");
        SolvabilityVerdict::EvidencePass { c: fit.c, k: fit.k }
    };
    report
}

/// Record lows in weight order assigned greedily to n = 1, 2, … with
/// λ < ⟨ξ⟩^{−n}.
fn witness_indices(samples: &[Sample]) -> Vec<WitnessIndex> {
    let mut out = Vec::new();
    let mut n = 1u32;
    for s in record_lows(samples) {
        if s.value < s.weight.powf(-(n as f64)) {
            out.push(WitnessIndex { index: s.index.clone(), n, weight: s.weight, lambda_min_pos: s.value });
            n += 1;
        }
    }
    out
}

/// Fits λ_min^{>0}[σ(ξ)] ≥ C⟨ξ⟩^{−k} over `range`.
///
/// k is the smallest exponent ≤ 64 for which the minimum of λ⟨ξ⟩^k over
/// the upper half of the weight range (geometric split) is at least half
/// the minimum over the lower half. The same fit on the lower half alone
/// gives k_head. Evidence of failure is no admissible k, or k > k_head
/// together with a drop of more than two decades at k_head.
pub fn solvability_gate(sigma: &SymbolMap, range: &[DualIndex], rank_tol: f64) -> Result<SolvabilityReport> {
    let first = range.first().ok_or_else(|| Error::InvalidArgument("dual range is empty".into()))?;
    let group = first.group();
    let mut samples = Vec::new();
    let mut zeros = Vec::new();
    for (idx, l) in lambdas(sigma, range, rank_tol)? {
        match l {
            Some(l) => samples.push(Sample { weight: idx.weight(), index: idx, value: l }),
            None => zeros.push(idx),
        }
    }
    let desc = format!("{} indices", range.len());
    let count = zeros.len() as u64;
    Ok(decide("multiplier".into(), group, desc, samples, zeros, count, true))
}

/// The gate for Y = ⟨α,∇⟩ on 0 < |ξ| ≤ radius, streamed row by row.
pub fn torus_solvability_gate(dir: &Direction, radius: f64) -> Result<SolvabilityReport> {
    let s = torus_samples(dir, radius)?;
    Ok(decide(
        format!("vector field alpha={:?}", dir.alpha),
        Group::Torus(dir.dim()),
        format!("0 < |xi| <= {radius}"),
        s.envelope.into_samples(),
        s.zeros,
        s.zero_count,
        false,
    ))
}

fn residual_of(p: &CMatrix, f: &CMatrix) -> f64 {
    (f - &(p * f)).hs_norm()
}

/// True when every column of every f̂(ξ) lies in ran σ(ξ), relative to ‖f̂(ξ)‖.
pub fn annihilator_check(f: &FourierData, sigma: &SymbolMap, rank_tol: f64, residual_tol: f64) -> Result<bool> {
    for (idx, coeff) in &f.entries {
        let m = sigma.get(idx).ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {idx}")))?;
        let p = range_projector(m, rank_tol)?;
        if residual_of(&p, coeff) > residual_tol * coeff.hs_norm() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRow {
    #[serde(flatten)]
    pub index: DualIndex,
    pub rhs_norm: f64,
    pub solution_norm: f64,
    /// ‖σû − f̂‖/‖f̂‖.
    pub residual: f64,
    /// C⁻¹⟨ξ⟩^k when a fit was supplied.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: FourierData,
    pub rows: Vec<SolveRow>,
    pub max_residual: f64,
    /// max ‖û(ξ)‖/‖f̂(ξ)‖ over non-zero f̂(ξ).
    pub max_growth: f64,
}

/// û(ξ) = σ(ξ)⁺ f̂(ξ), after checking f̂(ξ) has its columns in ran σ(ξ).
pub fn solve_fourier(sigma: &SymbolMap, f: &FourierData, fit: Option<(f64, u32)>, rank_tol: f64, residual_tol: f64) -> Result<Solution> {
    let mut u = FourierData::new(f.group.clone());
    let mut rows = Vec::with_capacity(f.len());
    for (idx, coeff) in &f.entries {
        let m = sigma.get(idx).ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {idx}")))?;
        if m.rows() != coeff.rows() || !m.is_square() {
            return Err(Error::IncompatibleSymbol(format!("block at {idx} does not match the coefficient")));
        }
        let d = decompose(m, rank_tol)?;
        let p = &d.u * &d.u.adjoint();
        let rhs_norm = coeff.hs_norm();
        if residual_of(&p, coeff) > residual_tol * rhs_norm {
            return Err(Error::NotInRange(idx.clone()));
        }
        let sol = &pseudoinverse_from(&d) * coeff;
        let residual = if rhs_norm > 0.0 { (&(m * &sol) - coeff).hs_norm() / rhs_norm } else { 0.0 };
        let bound = fit.map(|(c, k)| idx.weight().powi(k as i32) / c);
        rows.push(SolveRow { index: idx.clone(), rhs_norm, solution_norm: sol.hs_norm(), residual, bound });
        u.entries.insert(idx.clone(), sol);
    }
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_growth = rows.iter().filter(|r| r.rhs_norm > 0.0).map(|r| r.solution_norm / r.rhs_norm).fold(0.0, f64::max);
    Ok(Solution { u, rows, max_residual, max_growth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    #[serde(flatten)]
    pub index: DualIndex,
    pub n: u32,
    pub weight: f64,
    /// ‖f̂(ξ_n)‖, below ⟨ξ_n⟩^{−n}.
    pub rhs_norm: f64,
    /// ‖û(ξ_n)‖ of the forced preimage, equal to 1.
    pub preimage_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonsolvableWitness {
    pub data: FourierData,
    pub rows: Vec<WitnessRow>,
}

fn build_witness(witnesses: &[WitnessIndex], block: &dyn Fn(&DualIndex) -> Result<CMatrix>, rank_tol: f64) -> Result<NonsolvableWitness> {
    let group = witnesses.first().ok_or(Error::NoWitness)?.index.group();
    let mut data = FourierData::new(group);
    let mut rows = Vec::new();
    for w in witnesses {
        let m = block(&w.index)?;
        let dec = decompose(&m, rank_tol)?;
        let v = dec.least_vector().ok_or(Error::NoWitness)?;
        let mut col = CMatrix::zeros(m.rows(), m.rows());
        col.set_column(0, &v);
        let coeff = &m * &col;
        let pre = &pseudoinverse_from(&dec) * &coeff;
        rows.push(WitnessRow { index: w.index.clone(), n: w.n, weight: w.weight, rhs_norm: coeff.hs_norm(), preimage_norm: pre.hs_norm() });
        data.insert(w.index.clone(), coeff)?;
    }
    Ok(NonsolvableWitness { data, rows })
}

/// f̂(ξ_n) = σ(ξ_n)(v_n 0 ⋯ 0) at the failing indices of the gate, v_n the
/// unit least singular vector, so that any preimage has ‖û(ξ_n)‖ ≥ 1.
pub fn nonsolvable_witness(sigma: &SymbolMap, range: &[DualIndex], rank_tol: f64) -> Result<NonsolvableWitness> {
    let report = solvability_gate(sigma, range, rank_tol)?;
    let SolvabilityVerdict::EvidenceFail { witnesses } = report.verdict else {
        return Err(Error::NoWitness);
    };
    build_witness(&witnesses, &|i| sigma.get(i).cloned().ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {i}"))), rank_tol)
}

pub fn torus_nonsolvable_witness(dir: &Direction, radius: f64, rank_tol: f64) -> Result<NonsolvableWitness> {
    let report = torus_solvability_gate(dir, radius)?;
    let SolvabilityVerdict::EvidenceFail { witnesses } = report.verdict else {
        return Err(Error::NoWitness);
    };
    build_witness(
        &witnesses,
        &|i| {
            let DualIndex::Torus(xi) = i else { unreachable!("torus scan") };
            let (d, zero) = dir.dot(xi);
            Ok(CMatrix::from_diagonal(&[if zero { ZERO } else { I * d }]))
        },
        rank_tol,
    )
}
