//! Tube-type fields Y = ∂_t + a(t)X on T¹×G: the profile a, the unitary
//! conjugation Ψ onto Y₀ = ∂_t + a₀X, the reduced symbol and its gate, and
//! the constant transfer between Y₀ and Y.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::diophantine::{
    continued_fraction, continued_fraction_exact, eventual_period, irrationality_exponent_estimate, irrationality_exponent_estimate_exact,
    parse_direction, IrrationalityEstimate, Verdict,
};
use crate::envelope::{Envelope, Sample};
use crate::error::{Error, Result};
use crate::fourier::{torus_dual_shell, Direction, DualIndex, FourierData, Group, SymbolBlock, SymbolMap};
use crate::linalg::{hermitian_eigen, CMatrix, I, ZERO};
use crate::poincare::{assemble_streamed, check_delta, margin_trend, GateReport, Margin};

const ZERO_SAMPLE: usize = 64;

/// Constant term of a profile: a number, or a direction literal such as
/// `"phi"`, `"3/7"` or `"L4"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Constant {
    Number(f64),
    Literal(String),
}

impl Default for Constant {
    fn default() -> Self {
        Constant::Number(0.0)
    }
}

/// a(t) = const + Σ_j cos[j−1]·cos(jt) + sin[j−1]·sin(jt).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    #[serde(rename = "const", default)]
    pub constant: Constant,
}

/// How the mean a₀ is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Mean {
    pub value: f64,
    pub exact: Option<BigRational>,
    /// Given as an integer or `p/q` literal.
    pub rational_literal: bool,
}

impl Profile {
    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { cos, sin, constant: Constant::Number(constant) }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Profile = serde_json::from_str(s)?;
        p.mean()?;
        if !p.cos.iter().chain(&p.sin).all(|v| v.is_finite()) {
            return Err(Error::Parse("profile coefficients must be finite".into()));
        }
        Ok(p)
    }

    pub fn mean(&self) -> Result<Mean> {
        match &self.constant {
            Constant::Number(v) if v.is_finite() => Ok(Mean { value: *v, exact: None, rational_literal: false }),
            Constant::Number(_) => Err(Error::Parse("profile constant must be finite".into())),
            Constant::Literal(s) => {
                let spec = parse_direction(s)?;
                if spec.direction.dim() != 1 {
                    return Err(Error::Parse(format!("profile constant {s:?} must be a single value")));
                }
                Ok(Mean {
                    value: spec.direction.alpha[0],
                    exact: spec.direction.exact_values().map(|v| v[0].clone()),
                    rational_literal: spec.rational,
                })
            }
        }
    }

    /// a₀, the constant Fourier coefficient.
    pub fn a0(&self) -> f64 {
        self.mean().map(|m| m.value).unwrap_or(f64::NAN)
    }

    pub fn max_frequency(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
        last(&self.cos).max(last(&self.sin))
    }

    /// a(t) − a₀.
    pub fn oscillation(&self, t: f64) -> f64 {
        let c: f64 = self.cos.iter().enumerate().map(|(j, c)| c * ((j + 1) as f64 * t).cos()).sum();
        let s: f64 = self.sin.iter().enumerate().map(|(j, s)| s * ((j + 1) as f64 * t).sin()).sum();
        c + s
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.a0() + self.oscillation(t)
    }

    /// A(t) = ∫₀ᵗ a(τ)dτ − a₀t, integrated termwise.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let c: f64 = self.cos.iter().enumerate().map(|(j, c)| c * ((j + 1) as f64 * t).sin() / (j + 1) as f64).sum();
        let s: f64 = self.sin.iter().enumerate().map(|(j, s)| s * (1.0 - ((j + 1) as f64 * t).cos()) / (j + 1) as f64).sum();
        c + s
    }

    /// var(a) = max_t (a(t) − a₀)², from a dense grid refined by
    /// golden-section search around its local maxima.
    pub fn var_a(&self) -> f64 {
        let n = 2048.max(64 * self.max_frequency());
        let h = TAU / n as f64;
        let g = |t: f64| self.oscillation(t).powi(2);
        let vals: Vec<f64> = (0..n).map(|i| g(i as f64 * h)).collect();
        let mut best = vals.iter().copied().fold(0.0, f64::max);
        for i in 0..n {
            let (prev, next) = (vals[(i + n - 1) % n], vals[(i + 1) % n]);
            if vals[i] >= prev && vals[i] >= next && vals[i] > 0.0 {
                best = best.max(golden_max(&g, (i as f64 - 1.0) * h, (i as f64 + 1.0) * h));
            }
        }
        best
    }
}

fn golden_max(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-10 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    gc.max(gd).max(g((a + b) / 2.0))
}

/// σ_{Y₀}(k,ξ) = ik·Id + a₀σ_X(ξ), for an anti-hermitian σ_X(ξ).
pub fn reduced_symbol(k: i64, a0: f64, sigma_x: &SymbolBlock) -> SymbolBlock {
    let d = sigma_x.matrix.rows();
    let m = &CMatrix::identity(d).scale(I * k as f64) + &sigma_x.matrix.scale_real(a0);
    SymbolBlock::new(DualIndex::tube(k, sigma_x.index.clone()), m)
}

/// c = c₀/(var(a)+1)^{(δ−1)/2}.
pub fn constant_transfer(c0: f64, var_a: f64, delta: f64) -> f64 {
    c0 / (var_a + 1.0).powf((delta - 1.0) / 2.0)
}

/// The inner field X on G.
pub enum InnerField<'a> {
    /// Anti-hermitian blocks of X over an explicit inner range.
    Blocks { sigma: &'a SymbolMap, range: &'a [DualIndex] },
    /// X = ⟨α,∇⟩ on Tⁿ over every m with |m| ≤ radius, including m = 0.
    Torus { direction: &'a Direction, radius: f64 },
}

/// One inner index with the eigenvalue lines k ↦ k + a₀μ_r.
struct Line {
    inner: DualIndex,
    inner_weight: f64,
    /// −a₀μ_r, the real zeros of the lines.
    centers: Vec<f64>,
    /// a₀μ_r, for block evaluation of non-torus lines.
    shifts: Vec<f64>,
}

fn torus_inner(direction: &Direction, radius: f64) -> Result<Vec<DualIndex>> {
    let n = direction.dim();
    let mut out = vec![DualIndex::Torus(vec![0; n])];
    out.extend(torus_dual_shell(n, radius)?);
    Ok(out)
}

/// Gate of Y₀ = ∂_t + a₀X over |k| ≤ k_max: margins
/// min_r |k + a₀μ_r|·(|k|+⟨ξ⟩)^{δ−1} with exact-zero blocks set aside.
///
/// Only a₀ enters, so Y and Y₀ share the gate. Each line is scanned near
/// its zero, then again within B/⟨ξ⟩^{δ−1} of it, B the first-pass
/// minimum, which makes the minimum exact. The derived constant converts
/// the combined weight with |k|+⟨ξ⟩ ≤ √2·⟨(k,ξ)⟩.
pub fn tube_gate(profile: &Profile, inner: &InnerField, delta: f64, k_max: u64, rank_tol: f64) -> Result<GateReport> {
    check_delta(delta)?;
    let mean = profile.mean()?;
    let a0 = mean.value;
    let k_max = i64::try_from(k_max).map_err(|_| Error::InvalidArgument("k_max too large".into()))?;

    let (lines, beta, inner_group) = match inner {
        InnerField::Blocks { sigma, range } => {
            let first = range.first().ok_or_else(|| Error::InvalidArgument("inner range is empty".into()))?;
            let lines = range
                .iter()
                .map(|idx| {
                    let m = sigma.get(idx).ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {idx}")))?;
                    if m.rows() != idx.dim() || !m.is_anti_hermitian(1e-12) {
                        return Err(Error::IncompatibleSymbol(format!("block at {idx} is not an anti-hermitian {0}x{0} matrix", idx.dim())));
                    }
                    let mus = hermitian_eigen(&m.scale(-I)).values;
                    Ok(Line {
                        inner: idx.clone(),
                        inner_weight: idx.weight(),
                        centers: mus.iter().map(|mu| -a0 * mu).collect(),
                        shifts: mus.iter().map(|mu| a0 * mu).collect(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (lines, None, first.group())
        }
        InnerField::Torus { direction, radius } => {
            let beta = match (&mean.exact, direction.exact_values()) {
                (Some(e), Some(alpha)) => {
                    let mut v = vec![BigRational::one()];
                    v.extend(alpha.iter().map(|a| a * e));
                    Direction::from_rationals(&v)
                }
                _ => {
                    let mut v = vec![1.0];
                    v.extend(direction.alpha.iter().map(|a| a * a0));
                    Direction::new(v)
                }
            };
            let lines = torus_inner(direction, *radius)?
                .into_iter()
                .map(|idx| {
                    let DualIndex::Torus(m) = &idx else { unreachable!() };
                    let shift: f64 = m.iter().zip(&beta.alpha[1..]).map(|(&x, b)| x as f64 * b).sum();
                    Line { inner_weight: idx.weight(), centers: vec![-shift], shifts: vec![shift], inner: idx }
                })
                .collect();
            (lines, Some(beta), Group::Torus(direction.dim()))
        }
    };

    // λ_min^{>0} of the block at (k, line), None for a zero block.
    let eval = |line: &Line, k: i64| -> Option<f64> {
        if let Some(beta) = &beta {
            let DualIndex::Torus(m) = &line.inner else { unreachable!() };
            let mut xi = Vec::with_capacity(m.len() + 1);
            xi.push(k);
            xi.extend_from_slice(m);
            let (v, zero) = beta.dot(&xi);
            return (!zero).then(|| v.abs());
        }
        let vals: Vec<f64> = line.shifts.iter().map(|s| (k as f64 + s).abs()).collect();
        let top = vals.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return None;
        }
        vals.into_iter().filter(|&v| v > rank_tol * top).reduce(f64::min)
    };

    let near = |line: &Line, h: f64| -> BTreeSet<i64> {
        let mut ks = BTreeSet::new();
        for &c in &line.centers {
            let r = c.round().clamp(-(k_max as f64) - 2.0, k_max as f64 + 2.0) as i64;
            for k in r - 1..=r + 1 {
                if k.abs() <= k_max {
                    ks.insert(k);
                }
            }
            if h > 0.0 {
                let lo = ((c - h).ceil().max(-(k_max as f64))) as i64;
                let hi = ((c + h).floor().min(k_max as f64)) as i64;
                ks.extend(lo..=hi);
            }
        }
        ks
    };
    let margin = |lam: f64, k: i64, line: &Line| lam * (k.unsigned_abs() as f64 + line.inner_weight).powf(delta - 1.0);

    let bound = lines
        .par_iter()
        .map(|line| near(line, 0.0).into_iter().filter_map(|k| eval(line, k).map(|l| margin(l, k, line))).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min);

    struct Acc {
        env: Envelope,
        zeros: Vec<DualIndex>,
        zero_count: u64,
    }
    let acc = lines
        .par_iter()
        .fold(
            || Acc { env: Envelope::new(), zeros: Vec::new(), zero_count: 0 },
            |mut acc, line| {
                let h = if bound.is_finite() { bound * (1.0 + 1e-9) / line.inner_weight.powf(delta - 1.0) + 1e-6 } else { 0.0 };
                for k in near(line, h) {
                    let idx = DualIndex::tube(k, line.inner.clone());
                    match eval(line, k) {
                        Some(l) => acc.env.insert(Sample { weight: idx.combined_weight(), index: idx, value: l }),
                        None => {
                            acc.zero_count += 1;
                            if acc.zeros.len() < ZERO_SAMPLE {
                                acc.zeros.push(idx);
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || Acc { env: Envelope::new(), zeros: Vec::new(), zero_count: 0 },
            |mut a, b| {
                a.env = a.env.merge(b.env);
                a.zero_count += b.zero_count;
                a.zeros.extend(b.zeros);
                a.zeros.sort();
                a.zeros.truncate(ZERO_SAMPLE);
                a
            },
        );
    let mut zeros = acc.zeros;
    zeros.sort();
    zeros.truncate(ZERO_SAMPLE);
    let scanned = acc.env.inserted() + acc.zero_count;
    let margins = acc
        .env
        .into_samples()
        .into_iter()
        .map(|s| Margin { margin: s.value * s.weight.powf(delta - 1.0), index: s.index, weight: s.weight, lambda_min_pos: s.value })
        .collect();
    let report = assemble_streamed(Group::Tube(Box::new(inner_group)), delta, 2f64.sqrt(), margins, zeros, acc.zero_count, scanned);
    let range = match inner {
        InnerField::Blocks { range, .. } => format!("|k| <= {k_max}, {} inner indices", range.len()),
        InnerField::Torus { radius, .. } => format!("|k| <= {k_max}, |m| <= {radius}"),
    };
    Ok(report.with_operator(format!("tube field a0={a0}")).with_range(range))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaVerdict {
    pub delta: f64,
    pub empirical_c: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeT2Report {
    pub a0: f64,
    pub a0_exact: Option<String>,
    pub rational: bool,
    pub irrationality: Option<IrrationalityEstimate>,
    /// Continued fraction eventually periodic within depth 40, taken as a
    /// hint that a₀ is a quadratic irrational. Heuristic.
    pub eventually_periodic: bool,
    pub recommended_delta: f64,
    pub sweep: Vec<DeltaVerdict>,
    pub verdict: Verdict,
    pub report: GateReport,
}

const CF_DEPTH: usize = 40;

/// Tube gate on T² = T¹×T¹ for Y = ∂_t + a(t)∂_x at a recommended δ.
///
/// Rational a₀ gives δ = 1 off the resonance line. Otherwise δ = 2 when the
/// continued fraction of a₀ is eventually periodic and μ̂ + 0.1 if not.
/// Every δ of `delta_grid` is also scanned.
pub fn tube_t2_gate(profile: &Profile, delta_grid: &[f64], k_max: u64, radius: f64) -> Result<TubeT2Report> {
    let mean = profile.mean()?;
    let (quotients, rational, estimate) = match &mean.exact {
        Some(e) => {
            let cf = continued_fraction_exact(e, CF_DEPTH)?;
            let est = irrationality_exponent_estimate_exact(e, CF_DEPTH)?;
            (cf.quotients, mean.rational_literal, est)
        }
        None => {
            let cf = match continued_fraction(mean.value, CF_DEPTH) {
                Ok(cf) => cf,
                Err(Error::PrecisionExhausted { partial }) => *partial,
                Err(e) => return Err(e),
            };
            let est = irrationality_exponent_estimate(mean.value, CF_DEPTH)?;
            (cf.quotients, cf.rational, est)
        }
    };
    let periodic = !rational && eventual_period(&quotients).is_some();
    let recommended = if rational {
        1.0
    } else if periodic {
        2.0
    } else {
        estimate.mu_hat + 0.1
    };
    let one = Direction::from_rationals(&[BigRational::one()]);
    let run = |delta: f64| tube_gate(profile, &InnerField::Torus { direction: &one, radius }, delta, k_max, crate::spectral::DEFAULT_RANK_TOL);
    let report = run(recommended)?;
    let sweep = delta_grid
        .iter()
        .map(|&d| {
            let r = run(d)?;
            Ok(DeltaVerdict { delta: d, empirical_c: r.empirical_c, verdict: margin_trend(&r) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TubeT2Report {
        a0: mean.value,
        a0_exact: mean.exact.as_ref().map(ToString::to_string),
        rational,
        irrationality: (!rational).then_some(estimate),
        eventually_periodic: periodic,
        recommended_delta: recommended,
        sweep,
        verdict: margin_trend(&report),
        report,
    })
}

/// Partial Fourier data f̂(t_j, ξ) on the grid t_j = 2πj/n_t.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeGrid {
    pub n_t: usize,
    pub inner: Group,
    pub samples: BTreeMap<DualIndex, Vec<CMatrix>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiDirection {
    Forward,
    Inverse,
}

fn grid_times(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// Frequency of FFT bin b on an n-point grid, in [−n/2, n/2).
fn bin_frequency(b: usize, n: usize) -> i64 {
    if b < n / 2 {
        b as i64
    } else {
        b as i64 - n as i64
    }
}

/// Applies `f` to every entry series of every block, in parallel over ξ.
fn map_series(grid: &TubeGrid, f: impl Fn(&mut Vec<Complex64>) + Sync) -> TubeGrid {
    let samples = grid
        .samples
        .par_iter()
        .map(|(idx, series)| {
            let d = idx.dim();
            let mut out = vec![CMatrix::zeros(d, d); grid.n_t];
            for r in 0..d {
                for c in 0..d {
                    let mut s: Vec<Complex64> = series.iter().map(|m| m[(r, c)]).collect();
                    f(&mut s);
                    for (j, z) in s.into_iter().enumerate() {
                        out[j][(r, c)] = z;
                    }
                }
            }
            (idx.clone(), out)
        })
        .collect();
    TubeGrid { n_t: grid.n_t, inner: grid.inner.clone(), samples }
}

impl TubeGrid {
    /// Samples trigonometric data f̂(k,ξ) on the grid; needs n_t a power of
    /// two with 2|k| < n_t.
    pub fn from_modes(f: &FourierData, n_t: usize) -> Result<Self> {
        let Group::Tube(inner) = &f.group else {
            return Err(Error::InvalidArgument(format!("expected tube data, got {}", f.group)));
        };
        if !n_t.is_power_of_two() || n_t < 2 {
            return Err(Error::InvalidArgument(format!("grid size must be a power of two, got {n_t}")));
        }
        let mut spectra: BTreeMap<DualIndex, Vec<CMatrix>> = BTreeMap::new();
        for (idx, coeff) in &f.entries {
            let DualIndex::Tube { k, inner } = idx else { unreachable!("tube group") };
            if 2 * k.unsigned_abs() as usize >= n_t {
                return Err(Error::InvalidArgument(format!("frequency {k} is not resolved by {n_t} grid points")));
            }
            let d = inner.dim();
            let slot = k.rem_euclid(n_t as i64) as usize;
            spectra.entry((**inner).clone()).or_insert_with(|| vec![CMatrix::zeros(d, d); n_t])[slot] = coeff.clone();
        }
        let spec = TubeGrid { n_t, inner: (**inner).clone(), samples: spectra };
        let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n_t);
        Ok(map_series(&spec, |s| ifft.process(s)))
    }

    /// Fourier coefficients in t, frequencies in [−n_t/2, n_t/2); zero
    /// coefficients are dropped.
    pub fn to_modes(&self) -> FourierData {
        let n = self.n_t;
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        let spec = map_series(self, |s| {
            fft.process(s);
            s.iter_mut().for_each(|z| *z /= n as f64);
        });
        let mut out = FourierData::new(Group::Tube(Box::new(self.inner.clone())));
        for (idx, series) in spec.samples {
            for (b, m) in series.into_iter().enumerate() {
                if !m.is_zero() {
                    out.entries.insert(DualIndex::tube(bin_frequency(b, n), idx.clone()), m);
                }
            }
        }
        out
    }

    /// ∂_t by spectral differentiation; the Nyquist bin is dropped.
    pub fn dt(&self) -> TubeGrid {
        let n = self.n_t;
        let mut planner = FftPlanner::<f64>::new();
        let (fft, ifft) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
        map_series(self, |s| {
            fft.process(s);
            for (b, z) in s.iter_mut().enumerate() {
                *z = if b == n / 2 { ZERO } else { *z * I * bin_frequency(b, n) as f64 / n as f64 };
            }
            ifft.process(s);
        })
    }

    /// (1/n_t)Σ_j Σ_ξ d_ξ‖f̂(t_j,ξ)‖², the squared L² norm on T¹×G.
    pub fn l2_norm(&self) -> f64 {
        let total: f64 = self.samples.iter().map(|(idx, s)| idx.dim() as f64 * s.iter().map(CMatrix::hs_norm_sqr).sum::<f64>()).sum();
        (total / self.n_t as f64).sqrt()
    }

    /// ‖∇f‖ with ∇ = (∂_t, ∇_G).
    pub fn gradient_norm(&self) -> f64 {
        let dt = self.dt().l2_norm();
        let inner: f64 = self.samples.iter().map(|(idx, s)| idx.dim() as f64 * idx.nu() * s.iter().map(CMatrix::hs_norm_sqr).sum::<f64>()).sum();
        (dt * dt + inner / self.n_t as f64).sqrt()
    }

    pub fn combine(&self, a: f64, other: &TubeGrid, b: f64) -> TubeGrid {
        let mut samples = self.samples.clone();
        for (idx, series) in samples.iter_mut() {
            for m in series.iter_mut() {
                *m = m.scale_real(a);
            }
            if let Some(o) = other.samples.get(idx) {
                for (m, x) in series.iter_mut().zip(o) {
                    *m = &*m + &x.scale_real(b);
                }
            }
        }
        for (idx, o) in &other.samples {
            samples.entry(idx.clone()).or_insert_with(|| o.iter().map(|x| x.scale_real(b)).collect());
        }
        TubeGrid { n_t: self.n_t, inner: self.inner.clone(), samples }
    }

    /// t-average of the coefficient at the trivial inner index.
    pub fn mean_coefficient(&self) -> Option<CMatrix> {
        let (_, s) = self.samples.iter().find(|(idx, _)| idx.is_trivial())?;
        let sum = s.iter().skip(1).fold(s[0].clone(), |acc, m| &acc + m);
        Some(sum.scale_real(1.0 / self.n_t as f64))
    }
}

fn diagonal_mu(sigma_x: &SymbolMap, idx: &DualIndex) -> Result<Vec<f64>> {
    let m = sigma_x.get(idx).ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {idx}")))?;
    let tol = 1e-12 * (1.0 + m.max_abs());
    if !m.is_diagonal(tol) || (0..m.rows()).any(|r| m[(r, r)].re.abs() > tol) {
        return Err(Error::RequiresDiagonalization(idx.clone()));
    }
    Ok((0..m.rows()).map(|r| m[(r, r)].im).collect())
}

/// Ψ multiplies row r of f̂(t,ξ) by e^{−iμ_r(ξ)A(t)} (forward) or its
/// inverse, with σ_X(ξ) = diag(iμ_r).
pub fn psi_transform(grid: &TubeGrid, profile: &Profile, sigma_x: &SymbolMap, direction: PsiDirection) -> Result<TubeGrid> {
    let sign = match direction {
        PsiDirection::Forward => -1.0,
        PsiDirection::Inverse => 1.0,
    };
    let big_a: Vec<f64> = grid_times(grid.n_t).into_iter().map(|t| profile.antiderivative(t)).collect();
    let mut samples = BTreeMap::new();
    for (idx, series) in &grid.samples {
        let mu = diagonal_mu(sigma_x, idx)?;
        let out = series
            .iter()
            .zip(&big_a)
            .map(|(m, a)| {
                let mut m = m.clone();
                for (r, mu_r) in mu.iter().enumerate() {
                    let phase = Complex64::from_polar(1.0, sign * mu_r * a);
                    for c in 0..m.cols() {
                        m[(r, c)] *= phase;
                    }
                }
                m
            })
            .collect();
        samples.insert(idx.clone(), out);
    }
    Ok(TubeGrid { n_t: grid.n_t, inner: grid.inner.clone(), samples })
}

/// (∂_t + a(t)σ_X) applied on the grid, for a(t_j) given per grid point.
fn apply_with(grid: &TubeGrid, a: &[f64], sigma_x: &SymbolMap) -> Result<TubeGrid> {
    let dt = grid.dt();
    let mut out = BTreeMap::new();
    for (idx, series) in &grid.samples {
        let m = sigma_x.get(idx).ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {idx}")))?;
        let ds = &dt.samples[idx];
        let s = series.iter().zip(ds).zip(a).map(|((f, d), &aj)| d + &(m * f).scale_real(aj)).collect();
        out.insert(idx.clone(), s);
    }
    Ok(TubeGrid { n_t: grid.n_t, inner: grid.inner.clone(), samples: out })
}

/// Y f = ∂_t f + a(t)X f.
pub fn apply_y(grid: &TubeGrid, profile: &Profile, sigma_x: &SymbolMap) -> Result<TubeGrid> {
    let a: Vec<f64> = grid_times(grid.n_t).into_iter().map(|t| profile.eval(t)).collect();
    apply_with(grid, &a, sigma_x)
}

/// Y₀ f = ∂_t f + a₀X f.
pub fn apply_y0(grid: &TubeGrid, a0: f64, sigma_x: &SymbolMap) -> Result<TubeGrid> {
    apply_with(grid, &vec![a0; grid.n_t], sigma_x)
}

/// ‖∇f‖^{δ−1}‖Yf‖/‖f‖^δ on the grid, with Yf supplied.
pub fn grid_quotient(f: &TubeGrid, yf: &TubeGrid, delta: f64) -> Result<f64> {
    let n = f.l2_norm();
    if n == 0.0 {
        return Err(Error::UndefinedQuotient);
    }
    Ok((f.gradient_norm() / n).powf(delta - 1.0) * (yf.l2_norm() / n))
}

/// ‖Ψ⁻¹YΨf − Y₀f‖ and ‖f‖ on the grid.
pub fn conjugation_residual(grid: &TubeGrid, profile: &Profile, sigma_x: &SymbolMap) -> Result<(f64, f64)> {
    let psi = psi_transform(grid, profile, sigma_x, PsiDirection::Forward)?;
    let back = psi_transform(&apply_y(&psi, profile, sigma_x)?, profile, sigma_x, PsiDirection::Inverse)?;
    let direct = apply_y0(grid, profile.a0(), sigma_x)?;
    Ok((back.combine(1.0, &direct, -1.0).l2_norm(), grid.l2_norm()))
}
