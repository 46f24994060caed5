//! Directional Poincaré gates: margins λ_min^{>0}[σ(ξ)]·⟨ξ⟩^{δ−1}, the
//! derived constant, quotients, kernel projections, counterexamples and the
//! composed inequalities for normal operators.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diophantine::{fold_rows, Verdict};
use crate::envelope::{geometric_split, record_lows, Envelope, Sample};
use crate::error::{Error, Result};
use crate::fourier::{apply_multiplier, gradient_norm, l2_norm, Direction, DualIndex, FourierData, Group, SymbolMap};
use crate::linalg::{CMatrix, I, ZERO};
use crate::rng::SplitMix64;
use crate::spectral::{decompose, ker_perp_projector, kernel_vector};

/// Zero blocks listed explicitly in a streamed report.
const ZERO_SAMPLE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    #[serde(flatten)]
    pub index: DualIndex,
    pub weight: f64,
    pub lambda_min_pos: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub operator: String,
    pub group: String,
    pub delta: f64,
    pub range: String,
    pub c1: f64,
    pub empirical_c: Option<f64>,
    pub derived_c: Option<f64>,
    pub worst_index: Option<DualIndex>,
    /// Every block on the range is zero.
    pub vacuous: bool,
    pub scanned: u64,
    pub zero_block_count: u64,
    pub zero_blocks: Vec<DualIndex>,
    /// False when `margins` holds only the lower envelope of a streamed scan.
    pub margins_complete: bool,
    pub margins: Vec<Margin>,
}

impl GateReport {
    pub fn with_operator(mut self, operator: impl Into<String>) -> Self {
        self.operator = operator.into();
        self
    }

    pub fn with_range(mut self, range: impl Into<String>) -> Self {
        self.range = range.into();
        self
    }
}

/// c = √3·C / (2^δ·C₁^{(δ−1)/2}).
///
/// Chain: with N = ‖∇f‖²/‖f‖², at most a quarter of ‖f‖² sits on ν_ξ > 4N,
/// and ⟨ξ⟩² ≤ 4C₁N on the rest. Needs f̂ = 0 at the trivial representation
/// when δ > 1.
pub fn derived_c(c: f64, delta: f64, c1: f64) -> f64 {
    3f64.sqrt() * c / (2f64.powf(delta) * c1.powf((delta - 1.0) / 2.0))
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta >= 1.0) {
        return Err(Error::InvalidArgument(format!("delta must be finite and at least 1, got {delta}")));
    }
    Ok(())
}

fn block_of<'a>(sigma: &'a SymbolMap, idx: &DualIndex) -> Result<&'a CMatrix> {
    let m = sigma.get(idx).ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {idx}")))?;
    let d = idx.dim();
    if m.rows() != d || m.cols() != d {
        return Err(Error::IncompatibleSymbol(format!("block at {idx} is {}x{}, expected {d}x{d}", m.rows(), m.cols())));
    }
    Ok(m)
}

fn range_group(range: &[DualIndex]) -> Result<Group> {
    let first = range.first().ok_or_else(|| Error::InvalidArgument("dual range is empty".into()))?;
    let g = first.group();
    if let Some(bad) = range.iter().find(|i| i.group() != g) {
        return Err(Error::IncompatibleSymbol(format!("{bad} does not belong to {g}")));
    }
    Ok(g)
}

fn describe_range(range: &[DualIndex]) -> String {
    let wmax = range.iter().map(DualIndex::weight).fold(0.0, f64::max);
    format!("{} indices, max weight {wmax:.6}", range.len())
}

/// Per-index λ_min^{>0} on a range; `None` marks zero blocks.
pub(crate) fn lambdas(sigma: &SymbolMap, range: &[DualIndex], rank_tol: f64) -> Result<Vec<(DualIndex, Option<f64>)>> {
    range
        .par_iter()
        .map(|idx| {
            let m = block_of(sigma, idx)?;
            Ok((idx.clone(), decompose(m, rank_tol)?.lambda_min_pos()))
        })
        .collect()
}

struct Assembly {
    group: Group,
    delta: f64,
    /// Margin weights are divided by this before the constant chain.
    weight_slack: f64,
    margins: Vec<Margin>,
    zero_blocks: Vec<DualIndex>,
    zero_block_count: u64,
    scanned: u64,
    complete: bool,
}

fn assemble(a: Assembly) -> GateReport {
    let worst = a
        .margins
        .iter()
        .min_by(|x, y| x.margin.total_cmp(&y.margin).then_with(|| x.index.cmp(&y.index)));
    let empirical_c = worst.map(|m| m.margin);
    let c1 = a.group.c1();
    let derived = empirical_c.map(|c| derived_c(c / a.weight_slack.powf(a.delta - 1.0), a.delta, c1));
    GateReport {
        operator: "multiplier".into(),
        group: a.group.tag(),
        delta: a.delta,
        range: String::new(),
        c1,
        empirical_c,
        derived_c: derived,
        worst_index: worst.map(|m| m.index.clone()),
        vacuous: a.margins.is_empty(),
        scanned: a.scanned,
        zero_block_count: a.zero_block_count,
        zero_blocks: a.zero_blocks,
        margins_complete: a.complete,
        margins: a.margins,
    }
}

/// Margins λ_min^{>0}[σ(ξ)]·⟨ξ⟩^{δ−1} over `range`; zero blocks are listed
/// and never count as violations.
pub fn gate_scan(sigma: &SymbolMap, delta: f64, range: &[DualIndex], rank_tol: f64) -> Result<GateReport> {
    check_delta(delta)?;
    let group = range_group(range)?;
    let lam = lambdas(sigma, range, rank_tol)?;
    let mut margins = Vec::new();
    let mut zero_blocks = Vec::new();
    for (idx, l) in lam {
        match l {
            Some(l) => {
                let w = idx.weight();
                margins.push(Margin { index: idx, weight: w, lambda_min_pos: l, margin: l * w.powf(delta - 1.0) });
            }
            None => zero_blocks.push(idx),
        }
    }
    let report = assemble(Assembly {
        group,
        delta,
        weight_slack: 1.0,
        zero_block_count: zero_blocks.len() as u64,
        zero_blocks,
        margins,
        scanned: range.len() as u64,
        complete: true,
    });
    Ok(report.with_range(describe_range(range)))
}

/// Row-nearest samples of |⟨ξ,α⟩| with weight ⟨ξ⟩ over 0 < |ξ| ≤ radius.
pub(crate) struct TorusSamples {
    pub envelope: Envelope,
    pub zero_count: u64,
    pub zeros: Vec<DualIndex>,
}

impl TorusSamples {
    fn merge(mut self, other: TorusSamples) -> TorusSamples {
        self.envelope = self.envelope.merge(other.envelope);
        self.zero_count += other.zero_count;
        self.zeros.extend(other.zeros);
        self.zeros.sort();
        self.zeros.truncate(ZERO_SAMPLE);
        self
    }
}

/// On every row the points within distance 1 of the real zero of ⟨ξ,α⟩
/// are kept. Any other point has |⟨ξ,α⟩| ≥ |α_p| and ⟨ξ⟩ ≥ √2, so it never
/// undercuts the unit vector e_p, which is always kept. Minima of
/// |⟨ξ,α⟩|·⟨ξ⟩^k for k ≥ 0 are therefore exact.
pub(crate) fn torus_samples(dir: &Direction, radius: f64) -> Result<TorusSamples> {
    let out = fold_rows(
        dir,
        radius,
        || TorusSamples { envelope: Envelope::new(), zero_count: 0, zeros: Vec::new() },
        |mut acc, row| {
            for x in row.nearest(1) {
                let xi = row.xi(x);
                let (dot, zero) = dir.dot(&xi);
                let idx = DualIndex::Torus(xi);
                if zero {
                    acc.zero_count += 1;
                    if acc.zeros.len() < ZERO_SAMPLE {
                        acc.zeros.push(idx);
                    }
                } else {
                    let weight = idx.weight();
                    acc.envelope.insert(Sample { index: idx, weight, value: dot.abs() });
                }
            }
            acc
        },
        TorusSamples::merge,
    )?;
    Ok(TorusSamples { zeros: { let mut z = out.zeros; z.sort(); z.truncate(ZERO_SAMPLE); z }, ..out })
}

/// Gate of Y = ⟨α,∇⟩ on Tⁿ over 0 < |ξ| ≤ radius without materialising the
/// symbol. `margins` keeps the lower envelope only; `empirical_c` is exact.
pub fn torus_field_gate(dir: &Direction, delta: f64, radius: f64) -> Result<GateReport> {
    check_delta(delta)?;
    let s = torus_samples(dir, radius)?;
    let scanned = s.envelope.inserted() + s.zero_count;
    let margins = s
        .envelope
        .into_samples()
        .into_iter()
        .map(|x| Margin { margin: x.value * x.weight.powf(delta - 1.0), index: x.index, weight: x.weight, lambda_min_pos: x.value })
        .collect();
    let report = assemble(Assembly {
        group: Group::Torus(dir.dim()),
        delta,
        weight_slack: 1.0,
        margins,
        zero_blocks: s.zeros,
        zero_block_count: s.zero_count,
        scanned,
        complete: false,
    });
    Ok(report.with_operator(format!("vector field alpha={:?}", dir.alpha)).with_range(format!("0 < |xi| <= {radius}")))
}

pub(crate) fn assemble_streamed(group: Group, delta: f64, weight_slack: f64, margins: Vec<Margin>, zeros: Vec<DualIndex>, zero_count: u64, scanned: u64) -> GateReport {
    assemble(Assembly { group, delta, weight_slack, margins, zero_blocks: zeros, zero_block_count: zero_count, scanned, complete: false })
}

/// Pass unless the margins on the upper half of the weight range (geometric
/// split) fall more than two decades below those on the lower half.
/// Vacuous reports are inconclusive.
pub fn margin_trend(report: &GateReport) -> Verdict {
    let Some(c) = report.empirical_c else { return Verdict::Inconclusive };
    let (lo, hi) = report.margins.iter().fold((f64::INFINITY, 0.0f64), |(a, b), m| (a.min(m.weight), b.max(m.weight)));
    let split = geometric_split(lo, hi * (1.0 + 1e-12));
    let head = report.margins.iter().filter(|m| m.weight < split).map(|m| m.margin).fold(f64::INFINITY, f64::min);
    if !head.is_finite() || c >= head / 100.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Replaces every f̂(ξ) by the projection of its columns onto (ker σ(ξ))^⊥.
pub fn project_ker_perp(f: &FourierData, sigma: &SymbolMap, rank_tol: f64) -> Result<FourierData> {
    let mut out = FourierData::new(f.group.clone());
    for (idx, coeff) in &f.entries {
        let p = ker_perp_projector(block_of(sigma, idx)?, rank_tol)?;
        out.entries.insert(idx.clone(), &p * coeff);
    }
    Ok(out)
}

/// Which subspace test data is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// (ker P|_{H¹})^⊥.
    KerPerp,
    /// Mean-zero functions only.
    MeanZero,
}

pub fn project(f: &FourierData, sigma: &SymbolMap, constraint: Constraint, rank_tol: f64) -> Result<FourierData> {
    match constraint {
        Constraint::KerPerp => project_ker_perp(f, sigma, rank_tol),
        Constraint::MeanZero => Ok(f.mean_zero()),
    }
}

/// ‖∇f‖^{δ−1}‖σf‖ / ‖f‖^δ.
pub fn poincare_quotient(f: &FourierData, sigma: &SymbolMap, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let n = l2_norm(f);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::UndefinedQuotient);
    }
    let pf = apply_multiplier(sigma, f)?;
    Ok((gradient_norm(f) / n).powf(delta - 1.0) * (l2_norm(&pf) / n))
}

/// Gaussian data on `range`, projected to the constraint and normalised.
pub fn random_projected(sigma: &SymbolMap, range: &[DualIndex], constraint: Constraint, rng: &mut SplitMix64, rank_tol: f64) -> Result<FourierData> {
    let group = range_group(range)?;
    let f = project(&FourierData::random(group, range, rng), sigma, constraint, rank_tol)?;
    let n = l2_norm(&f);
    if n == 0.0 {
        return Err(Error::UndefinedQuotient);
    }
    Ok(f.scale(1.0 / n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub index: DualIndex,
    /// Unit L² norm, supported on one index and one column.
    pub data: FourierData,
    pub quotient: f64,
    pub margin: Option<f64>,
}

/// f̂(ξ) = (v 0 ⋯ 0)/√d_ξ, which has ‖f‖ = 1 for a unit vector v.
fn single_column(index: &DualIndex, v: &[Complex64]) -> Result<FourierData> {
    let d = index.dim();
    let s = 1.0 / (d as f64).sqrt();
    let mut m = CMatrix::zeros(d, d);
    for (i, z) in v.iter().enumerate() {
        m[(i, 0)] = z * s;
    }
    FourierData::single_mode(index.clone(), m)
}

fn witness_at(index: &DualIndex, block: &CMatrix, v: &[Complex64], delta: f64, margin: Option<f64>) -> Result<Witness> {
    let data = single_column(index, v)?;
    let sigma: SymbolMap = [(index.clone(), block.clone())].into();
    let quotient = poincare_quotient(&data, &sigma, delta)?;
    Ok(Witness { index: index.clone(), data, quotient, margin })
}

/// Single-mode data driving the quotient to zero along the worst margins.
///
/// With `KerPerp` the margins must fall by more than 10× between the lower
/// and the upper half of the weight range (geometric split); the witnesses
/// are record lows thinned so each quotient is at most a tenth of the
/// previous, the last `count` of them, by decreasing quotient. With
/// `MeanZero` a kernel vector at a non-trivial index gives a single witness
/// of quotient zero; without one this falls back to `KerPerp`.
pub fn counterexample_sequence(sigma: &SymbolMap, delta: f64, range: &[DualIndex], count: usize, constraint: Constraint, rank_tol: f64) -> Result<Vec<Witness>> {
    let report = gate_scan(sigma, delta, range, rank_tol)?;
    if constraint == Constraint::MeanZero {
        let mut sorted: Vec<&DualIndex> = range.iter().filter(|i| !i.is_trivial()).collect();
        sorted.sort();
        for idx in sorted {
            let m = block_of(sigma, idx)?;
            if let Some(v) = kernel_vector(m, rank_tol)? {
                return Ok(vec![witness_at(idx, m, &v, delta, None)?]);
            }
        }
    }
    counterexamples_from(&report, count, &|idx| {
        let m = block_of(sigma, idx)?;
        let v = decompose(m, rank_tol)?.least_vector().ok_or_else(|| Error::Numeric(format!("zero block at {idx}")))?;
        Ok((m.clone(), v))
    })
}

/// The torus counterpart of [`counterexample_sequence`] on 0 < |ξ| ≤ radius.
pub fn torus_counterexample_sequence(dir: &Direction, delta: f64, radius: f64, count: usize, constraint: Constraint) -> Result<Vec<Witness>> {
    let report = torus_field_gate(dir, delta, radius)?;
    let block = |idx: &DualIndex| -> CMatrix {
        let DualIndex::Torus(xi) = idx else { unreachable!("torus scan") };
        let (d, zero) = dir.dot(xi);
        CMatrix::from_diagonal(&[if zero { ZERO } else { I * d }])
    };
    if constraint == Constraint::MeanZero {
        if let Some(idx) = report.zero_blocks.first() {
            return Ok(vec![witness_at(idx, &block(idx), &[Complex64::new(1.0, 0.0)], delta, None)?]);
        }
    }
    counterexamples_from(&report, count, &|idx| Ok((block(idx), vec![Complex64::new(1.0, 0.0)])))
}

type BlockSource<'a> = dyn Fn(&DualIndex) -> Result<(CMatrix, Vec<Complex64>)> + 'a;

fn counterexamples_from(report: &GateReport, count: usize, source: &BlockSource) -> Result<Vec<Witness>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    if report.margins.len() < 2 {
        return Err(Error::NoCounterexample);
    }
    let samples: Vec<Sample> = report.margins.iter().map(|m| Sample { index: m.index.clone(), weight: m.weight, value: m.margin }).collect();
    let (wmin, wmax) = samples.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.weight), hi.max(s.weight)));
    let split = geometric_split(wmin, wmax);
    let head = samples.iter().filter(|s| s.weight < split).map(|s| s.value).fold(f64::INFINITY, f64::min);
    let tail = samples.iter().filter(|s| s.weight >= split).map(|s| s.value).fold(f64::INFINITY, f64::min);
    if !head.is_finite() || !tail.is_finite() || tail >= head / 10.0 {
        return Err(Error::NoCounterexample);
    }
    let mut chain: Vec<Witness> = Vec::new();
    for s in record_lows(&samples) {
        let (m, v) = source(&s.index)?;
        let w = witness_at(&s.index, &m, &v, report.delta, Some(s.value))?;
        if chain.last().map_or(true, |last| w.quotient <= last.quotient / 10.0) {
            chain.push(w);
        }
    }
    let skip = chain.len().saturating_sub(count);
    Ok(chain.split_off(skip))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedReport {
    pub delta: f64,
    pub derived_c: Option<f64>,
    pub trials: usize,
    /// min over trials of (lhs − rhs)/rhs for ‖∇(Pu)‖^{δ−1}‖P²u‖ ≥ c‖Pu‖^δ.
    pub min_slack_composed: f64,
    /// The same for ‖∇u‖^{δ(δ−1)}‖∇(Pu)‖^{δ−1}‖P²u‖ ≥ c^{δ+1}‖u‖^{δ²},
    /// u ∈ (ker P)^⊥.
    pub min_slack_iterated: f64,
    pub holds: bool,
}

const SLACK_TOL: f64 = 1e-9;

fn relative_slack(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        (lhs - rhs) / rhs
    } else if lhs >= 0.0 {
        0.0
    } else {
        -1.0
    }
}

/// Evaluates both composed inequalities for a normal P on random data.
pub fn composed_inequality_check(sigma: &SymbolMap, delta: f64, range: &[DualIndex], trials: usize, rng: &mut SplitMix64, rank_tol: f64) -> Result<ComposedReport> {
    for idx in range {
        let m = block_of(sigma, idx)?;
        let scale = m.max_abs().max(1.0);
        if m.normality_defect() >= 1e-10 * scale * scale {
            return Err(Error::PreconditionViolated(format!("symbol block at {idx} is not normal")));
        }
    }
    let report = gate_scan(sigma, delta, range, rank_tol)?;
    let c = report.derived_c.unwrap_or(0.0);
    let group = range_group(range)?;
    let (mut s1, mut s2) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..trials {
        let u = FourierData::random(group.clone(), range, rng);
        let pu = apply_multiplier(sigma, &u)?;
        let ppu = apply_multiplier(sigma, &pu)?;
        let lhs = gradient_norm(&pu).powf(delta - 1.0) * l2_norm(&ppu);
        s1 = s1.min(relative_slack(lhs, c * l2_norm(&pu).powf(delta)));

        let v = project_ker_perp(&u, sigma, rank_tol)?;
        let pv = apply_multiplier(sigma, &v)?;
        let ppv = apply_multiplier(sigma, &pv)?;
        let lhs = gradient_norm(&v).powf(delta * (delta - 1.0)) * gradient_norm(&pv).powf(delta - 1.0) * l2_norm(&ppv);
        s2 = s2.min(relative_slack(lhs, c.powf(delta + 1.0) * l2_norm(&v).powf(delta * delta)));
    }
    Ok(ComposedReport {
        delta,
        derived_c: report.derived_c,
        trials,
        min_slack_composed: s1,
        min_slack_iterated: s2,
        holds: s1 >= -SLACK_TOL && s2 >= -SLACK_TOL,
    })
}
