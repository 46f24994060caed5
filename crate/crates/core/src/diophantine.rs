//! Lattice minima of |⟨ξ,α⟩|·|ξ|^{δ−1}, continued fractions, irrationality
//! exponents, rational-dependence constants and Liouville directions.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{parse_rational, rational_to_f64, Direction, DualIndex};

/// Budget for exhaustive scans, counted in enumerated rows.
pub const SCAN_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Number of kernel modes listed explicitly in a certificate.
const KERNEL_SAMPLE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineCertificate {
    pub alpha: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_exact: Option<Vec<String>>,
    pub delta: f64,
    pub scan_radius: f64,
    /// Minimum of |⟨ξ,α⟩|·|ξ|^{δ−1} over scanned ξ ≠ 0 off the kernel.
    pub empirical_c: Option<f64>,
    pub witness_xi: Option<Vec<i64>>,
    pub witness_dot: Option<f64>,
    pub verdict: Verdict,
    pub kernel_mode_count: u64,
    /// Lexicographically first kernel modes.
    pub kernel_modes: Vec<Vec<i64>>,
}

/// The margin |⟨ξ,α⟩|·|ξ|^{δ−1} with |ξ|² given as an integer.
pub fn lattice_margin(dot: f64, norm2: i128, delta: f64) -> f64 {
    dot.abs() * (norm2 as f64).sqrt().powf(delta - 1.0)
}

fn norm2(xi: &[i64]) -> i128 {
    xi.iter().map(|&x| x as i128 * x as i128).sum()
}

/// One line of the lattice disk parallel to the pivot axis.
pub(crate) struct Row<'a> {
    pub outer: &'a [i64],
    pub pivot: usize,
    /// Real solution x of ⟨ξ,α⟩ = 0 on this line.
    pub center: f64,
    /// Largest |x| keeping ξ inside the disk.
    pub xmax: i64,
    pub outer_norm2: i128,
}

impl Row<'_> {
    pub fn xi(&self, x: i64) -> Vec<i64> {
        let mut v = Vec::with_capacity(self.outer.len() + 1);
        v.extend_from_slice(&self.outer[..self.pivot]);
        v.push(x);
        v.extend_from_slice(&self.outer[self.pivot..]);
        v
    }

    pub fn contains(&self, x: i64) -> bool {
        x.abs() <= self.xmax && (x != 0 || self.outer_norm2 != 0)
    }

    /// Integers within `spread` of the nearest integer to the center.
    pub fn nearest(&self, spread: i64) -> impl Iterator<Item = i64> + '_ {
        let x0 = self.center.round().clamp(-(self.xmax as f64) - 1.0, self.xmax as f64 + 1.0) as i64;
        (x0 - spread..=x0 + spread).filter(move |&x| self.contains(x))
    }
}

/// Coordinate with the largest |α_i|.
pub(crate) fn pivot_of(dir: &Direction) -> usize {
    let mut p = 0;
    for (i, a) in dir.alpha.iter().enumerate() {
        if a.abs() > dir.alpha[p].abs() {
            p = i;
        }
    }
    p
}

/// Rough count of rows a scan of the given radius enumerates.
pub(crate) fn row_estimate(n: usize, radius: f64) -> f64 {
    let m = n.saturating_sub(1) as i32;
    match m {
        0 => 1.0,
        1 => 2.0 * radius + 1.0,
        _ => {
            // volume of the m-ball, padded by the boundary layer
            let unit = PI.powf(m as f64 / 2.0) / gamma_half_integer(m);
            unit * (radius + 1.0).powi(m)
        }
    }
}

/// Γ(m/2 + 1) for integer m ≥ 0.
fn gamma_half_integer(m: i32) -> f64 {
    let mut g = if m % 2 == 0 { 1.0 } else { PI.sqrt() / 2.0 };
    let mut k = if m % 2 == 0 { 1.0 } else { 1.5 };
    while k <= m as f64 / 2.0 {
        g *= k;
        k += 1.0;
    }
    g
}

/// Map-reduce over the rows of the disk |ξ| ≤ radius, parallel over the
/// first outer coordinate.
pub(crate) fn fold_rows<A, Id, F, C>(dir: &Direction, radius: f64, identity: Id, fold: F, combine: C) -> Result<A>
where
    A: Send,
    Id: Fn() -> A + Sync + Send,
    F: Fn(A, &Row) -> A + Sync + Send,
    C: Fn(A, A) -> A + Sync + Send,
{
    let n = dir.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("direction must have at least one coordinate".into()));
    }
    if !dir.is_finite() {
        return Err(Error::InvalidArgument("direction has non-finite entries".into()));
    }
    if !radius.is_finite() || radius < 1.0 {
        return Err(Error::InvalidArgument(format!("radius must be finite and at least 1, got {radius}")));
    }
    let points = row_estimate(n, radius);
    if points > SCAN_LIMIT {
        return Err(Error::ScanTooLarge { points });
    }
    let pivot = pivot_of(dir);
    let ap = dir.alpha[pivot];
    let others: Vec<f64> = dir.alpha.iter().enumerate().filter(|&(i, _)| i != pivot).map(|(_, &a)| a).collect();
    let r2 = radius * radius;
    let r = radius.floor() as i64;
    let m = n - 1;

    let visit = |acc: A, outer: &[i64]| -> A {
        let on2 = norm2(outer);
        let rest = r2 - on2 as f64;
        let mut xmax = rest.max(0.0).sqrt().floor() as i64;
        while ((xmax + 1) as f64).powi(2) + on2 as f64 <= r2 {
            xmax += 1;
        }
        while xmax > 0 && (xmax as f64).powi(2) + on2 as f64 > r2 {
            xmax -= 1;
        }
        let d: f64 = outer.iter().zip(&others).map(|(&o, a)| o as f64 * a).sum();
        let center = if ap == 0.0 { 0.0 } else { -d / ap };
        fold(acc, &Row { outer, pivot, center, xmax, outer_norm2: on2 })
    };

    if m == 0 {
        return Ok(visit(identity(), &[]));
    }
    let result = (-r..=r)
        .into_par_iter()
        .map(|first| {
            let mut acc = identity();
            let mut prefix = vec![first];
            let used = (first as f64).powi(2);
            if used <= r2 {
                walk_ball(&mut prefix, m, r2 - used, &mut |o| {
                    let taken = std::mem::replace(&mut acc, identity());
                    acc = visit(taken, o);
                });
            }
            acc
        })
        .reduce(&identity, &combine);
    Ok(result)
}

/// Visits every integer vector extending `prefix` to length `m` whose
/// remaining coordinates have squared norm ≤ budget, lexicographically.
fn walk_ball(prefix: &mut Vec<i64>, m: usize, budget: f64, visit: &mut dyn FnMut(&[i64])) {
    if prefix.len() == m {
        visit(prefix);
        return;
    }
    let b = budget.max(0.0).sqrt().floor() as i64;
    for x in -b..=b {
        let used = (x as f64).powi(2);
        if used <= budget {
            prefix.push(x);
            walk_ball(prefix, m, budget - used, visit);
            prefix.pop();
        }
    }
}

#[derive(Debug, Clone)]
struct Best {
    margin: f64,
    xi: Vec<i64>,
    dot: f64,
}

fn better(a: &Best, b: &Best) -> bool {
    match a.margin.total_cmp(&b.margin) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.xi < b.xi,
    }
}

fn min_best(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if better(&b, &a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

#[derive(Default)]
struct Pass2 {
    best: Option<Best>,
    kernel_count: u64,
    kernel: Vec<Vec<i64>>,
}

impl Pass2 {
    fn merge(mut self, other: Pass2) -> Pass2 {
        self.best = min_best(self.best, other.best);
        self.kernel_count += other.kernel_count;
        self.kernel.extend(other.kernel);
        self.kernel.sort();
        self.kernel.truncate(KERNEL_SAMPLE);
        self
    }
}

/// Exhaustive minimum of |⟨ξ,α⟩|·|ξ|^{δ−1} over 0 < |ξ| ≤ radius.
///
/// A first pass over the nearest lattice points of every row bounds the
/// minimum by B. The second pass visits, on each row, every x with
/// |α_p|·|x − c| ≤ B/max(1,|o|)^{δ−1}, which contains every point with
/// margin ≤ B. Ties go to the lexicographically smallest ξ.
pub fn lattice_minimum(dir: &Direction, delta: f64, radius: f64) -> Result<DiophantineCertificate> {
    if !(delta >= 1.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be finite and at least 1, got {delta}")));
    }
    let eval = |xi: Vec<i64>| -> Option<Best> {
        let (dot, zero) = dir.dot(&xi);
        (!zero).then(|| Best { margin: lattice_margin(dot, norm2(&xi), delta), dot, xi })
    };

    let bound = fold_rows(
        dir,
        radius,
        || None,
        |acc, row| row.nearest(1).fold(acc, |acc, x| min_best(acc, eval(row.xi(x)))),
        min_best,
    )?;

    let mut cert = DiophantineCertificate {
        alpha: dir.alpha.clone(),
        alpha_exact: dir.exact_values().map(|v| v.iter().map(ToString::to_string).collect()),
        delta,
        scan_radius: radius,
        empirical_c: None,
        witness_xi: None,
        witness_dot: None,
        verdict: Verdict::Inconclusive,
        kernel_mode_count: 0,
        kernel_modes: Vec::new(),
    };

    let ap = dir.alpha[pivot_of(dir)].abs();
    let Some(bound) = bound else {
        // α = 0: every mode is a kernel mode.
        let count = fold_rows(dir, radius, || 0u64, |acc, row| acc + (-row.xmax..=row.xmax).filter(|&x| row.contains(x)).count() as u64, |a, b| a + b)?;
        cert.kernel_mode_count = count;
        return Ok(cert);
    };

    let b = bound.margin;
    let pass2 = fold_rows(
        dir,
        radius,
        Pass2::default,
        |mut acc, row| {
            let o = (row.outer_norm2 as f64).sqrt().max(1.0);
            let h = b * (1.0 + 1e-9) / (ap * o.powf(delta - 1.0)) + 1e-6 + 1e-12 * row.center.abs();
            let lo = ((row.center - h).ceil() as i64).max(-row.xmax);
            let hi = ((row.center + h).floor() as i64).min(row.xmax);
            for x in lo..=hi {
                if !row.contains(x) {
                    continue;
                }
                let xi = row.xi(x);
                let (dot, zero) = dir.dot(&xi);
                if zero {
                    acc.kernel_count += 1;
                    if acc.kernel.len() < KERNEL_SAMPLE {
                        acc.kernel.push(xi);
                    }
                } else {
                    let cand = Best { margin: lattice_margin(dot, norm2(&xi), delta), dot, xi };
                    acc.best = min_best(acc.best.take(), Some(cand));
                }
            }
            acc
        },
        Pass2::merge,
    )?;
    let best = min_best(pass2.best, Some(bound)).expect("bound is a candidate");
    cert.empirical_c = Some(best.margin);
    cert.witness_xi = Some(best.xi);
    cert.witness_dot = Some(best.dot);
    cert.kernel_mode_count = pass2.kernel_count;
    let mut kernel = pass2.kernel;
    kernel.sort();
    kernel.truncate(KERNEL_SAMPLE);
    cert.kernel_modes = kernel;
    Ok(cert)
}

/// (radius, empirical C) for each radius.
pub fn margin_curve(dir: &Direction, delta: f64, radii: &[f64]) -> Result<Vec<(f64, Option<f64>)>> {
    radii.iter().map(|&r| Ok((r, lattice_minimum(dir, delta, r)?.empirical_c))).collect()
}

/// Decade radii 10, 100, … up to `radius`, always ending at `radius`.
pub fn decade_radii(radius: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 10.0;
    while r < radius {
        out.push(r);
        r *= 10.0;
    }
    out.push(radius.max(1.0));
    out
}

/// Orders of magnitude lost between the first and last value of a C(R)
/// curve; `None` when either end is missing.
pub fn curve_collapse_decades(curve: &[(f64, Option<f64>)]) -> Option<f64> {
    let first = curve.iter().find_map(|(_, c)| *c)?;
    let last = curve.last()?.1?;
    Some((first / last).log10())
}

/// Nearest-integer candidates of every row with |ξ| ≤ radius, plus the
/// whole disk up to `full_radius`. Sorted and free of duplicates.
///
/// The row candidates contain the minimiser of |⟨ξ,α⟩| on each row, so the
/// set carries the small-divisor structure of the full disk at a cost
/// linear in the number of rows.
pub fn reduced_torus_range(dir: &Direction, radius: f64, full_radius: f64) -> Result<Vec<DualIndex>> {
    let full = full_radius.min(radius);
    let f2 = full * full;
    let mut v = fold_rows(
        dir,
        radius,
        Vec::new,
        |mut acc: Vec<Vec<i64>>, row| {
            for x in -row.xmax..=row.xmax {
                if (x as f64).powi(2) + row.outer_norm2 as f64 <= f2 && row.contains(x) {
                    acc.push(row.xi(x));
                }
            }
            for x in row.nearest(1) {
                if (x as f64).powi(2) + row.outer_norm2 as f64 > f2 {
                    acc.push(row.xi(x));
                }
            }
            acc
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )?;
    v.sort();
    v.dedup();
    Ok(v.into_iter().map(DualIndex::Torus).collect())
}

mod bigint_strings {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(ToString::to_string).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter().map(|s| s.parse().map_err(serde::de::Error::custom)).collect()
    }
}

mod bigint_pairs {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[(BigInt, BigInt)], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|(p, q)| [p.to_string(), q.to_string()]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(BigInt, BigInt)>, D::Error> {
        let raw = Vec::<[String; 2]>::deserialize(d)?;
        raw.iter()
            .map(|[p, q]| Ok((p.parse().map_err(serde::de::Error::custom)?, q.parse().map_err(serde::de::Error::custom)?)))
            .collect()
    }
}

/// Partial quotients and convergents p_k/q_k, exact integers written as
/// decimal strings in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    #[serde(with = "bigint_strings")]
    pub quotients: Vec<BigInt>,
    #[serde(with = "bigint_pairs")]
    pub convergents: Vec<(BigInt, BigInt)>,
    /// The expansion terminated (exact input) or reached a convergent equal
    /// to the input up to its rounding (floating input).
    pub rational: bool,
}

impl ContinuedFraction {
    fn new() -> Self {
        Self { quotients: Vec::new(), convergents: Vec::new(), rational: false }
    }

    fn push(&mut self, a: BigInt) -> (BigInt, BigInt) {
        let n = self.convergents.len();
        let (p1, q1) = if n >= 1 { self.convergents[n - 1].clone() } else { (BigInt::one(), BigInt::zero()) };
        let (p2, q2) = if n >= 2 { self.convergents[n - 2].clone() } else if n == 1 { (BigInt::one(), BigInt::zero()) } else { (BigInt::zero(), BigInt::one()) };
        let p = &a * &p1 + p2;
        let q = &a * &q1 + q2;
        self.quotients.push(a);
        self.convergents.push((p.clone(), q.clone()));
        (p, q)
    }
}

fn floor_rational(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

/// Continued fraction of a double, computed exactly on its binary value.
///
/// Convergents are kept only while Legendre's criterion
/// 2q²(|x − p/q| + u) < 1 holds with u the rounding radius of x, so every
/// returned convergent is also a convergent of any real that rounds to x.
/// Running out of such convergents before `depth` is reported as
/// [`Error::PrecisionExhausted`] with the partial expansion.
pub fn continued_fraction(x: f64, depth: usize) -> Result<ContinuedFraction> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument("continued fraction of a non-finite number".into()));
    }
    if depth == 0 || depth > 64 {
        return Err(Error::InvalidArgument(format!("depth must lie in 1..=64, got {depth}")));
    }
    let xr = BigRational::from_float(x).expect("finite");
    let u = x.abs() * f64::EPSILON / 2.0;
    let mut cf = ContinuedFraction::new();
    let mut rem = xr.clone();
    while cf.quotients.len() < depth {
        // A remainder just below an integer is the rounding shadow of an
        // exact termination; try the rounded quotient first.
        let rounded = rem.round().to_integer();
        if rounded != floor_rational(&rem) {
            let mut trial = cf.clone();
            let (p, q) = trial.push(rounded);
            let err = rational_to_f64(&(&xr - BigRational::new(p, q.clone()))).abs();
            let qf = q.to_f64().unwrap_or(f64::INFINITY);
            if err <= 2.0 * u && qf * qf * u <= 1.0 / 16.0 {
                trial.rational = true;
                return Ok(trial);
            }
        }
        let a = floor_rational(&rem);
        let frac = &rem - BigRational::from_integer(a.clone());
        let mut trial = cf.clone();
        let (p, q) = trial.push(a);
        let err = rational_to_f64(&(&xr - BigRational::new(p, q.clone()))).abs();
        let qf = q.to_f64().unwrap_or(f64::INFINITY);
        if 2.0 * qf * qf * (err + u) >= 1.0 && cf.quotients.len() > 0 {
            return Err(Error::PrecisionExhausted { partial: Box::new(cf) });
        }
        cf = trial;
        if frac.is_zero() || (err <= 2.0 * u && qf * qf * u <= 1.0 / 16.0) {
            cf.rational = true;
            break;
        }
        rem = frac.recip();
    }
    Ok(cf)
}

/// Continued fraction of an exact rational, up to `depth` quotients.
pub fn continued_fraction_exact(x: &BigRational, depth: usize) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let mut cf = ContinuedFraction::new();
    let mut rem = x.clone();
    while cf.quotients.len() < depth {
        let a = floor_rational(&rem);
        let frac = &rem - BigRational::from_integer(a.clone());
        cf.push(a);
        if frac.is_zero() {
            cf.rational = true;
            break;
        }
        rem = frac.recip();
    }
    Ok(cf)
}

/// Finite-depth estimate of the irrationality exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrationalityEstimate {
    pub mu_hat: f64,
    pub rational: bool,
    /// Always true: the estimate only sees finitely many convergents.
    pub finite_depth: bool,
    pub convergents_used: usize,
    /// Denominator of the convergent attaining μ̂.
    pub witness_q: Option<String>,
}

fn exponent_from(x: &BigRational, convergents: &[(BigInt, BigInt)]) -> (f64, Option<BigInt>) {
    let eval = |min_q: f64| {
        convergents
            .iter()
            .filter_map(|(p, q)| {
                let qf = q.to_f64()?;
                if qf < min_q {
                    return None;
                }
                let err = rational_to_f64(&(x - BigRational::new(p.clone(), q.clone()))).abs();
                (err > 0.0).then(|| ((1.0 / err).ln() / qf.ln(), q.clone()))
            })
            .fold(None, |best: Option<(f64, BigInt)>, c| match best {
                Some(b) if b.0 >= c.0 => Some(b),
                _ => Some(c),
            })
    };
    match eval(1e4).or_else(|| eval(2.0)) {
        Some((mu, q)) => (mu, Some(q)),
        None => (1.0, None),
    }
}

/// μ̂ = max over convergents with q ≥ 10⁴ (or q ≥ 2 if there are none) of
/// log(1/|x − p/q|)/log q. Detected rationals report μ̂ = 1.
pub fn irrationality_exponent_estimate(x: f64, depth: usize) -> Result<IrrationalityEstimate> {
    let cf = match continued_fraction(x, depth) {
        Ok(cf) => cf,
        Err(Error::PrecisionExhausted { partial }) => *partial,
        Err(e) => return Err(e),
    };
    if cf.rational {
        return Ok(IrrationalityEstimate { mu_hat: 1.0, rational: true, finite_depth: true, convergents_used: cf.convergents.len(), witness_q: None });
    }
    let xr = BigRational::from_float(x).expect("finite");
    let (mu, q) = exponent_from(&xr, &cf.convergents);
    Ok(IrrationalityEstimate { mu_hat: mu, rational: false, finite_depth: true, convergents_used: cf.convergents.len(), witness_q: q.map(|q| q.to_string()) })
}

/// Exponent estimate for an exact rational standing in for an irrational
/// (e.g. a Liouville truncation). The final, exact convergent is left out,
/// so μ̂ describes the approximation profile below the denominator of x.
pub fn irrationality_exponent_estimate_exact(x: &BigRational, depth: usize) -> Result<IrrationalityEstimate> {
    let cf = continued_fraction_exact(x, depth)?;
    let usable = if cf.rational { &cf.convergents[..cf.convergents.len() - 1] } else { &cf.convergents[..] };
    let (mu, q) = exponent_from(x, usable);
    Ok(IrrationalityEstimate { mu_hat: mu, rational: cf.rational, finite_depth: true, convergents_used: usable.len(), witness_q: q.map(|q| q.to_string()) })
}

/// Preperiod and period of an eventually periodic quotient list, if the
/// periodic part repeats at least three times and covers ≥ 12 terms.
pub fn eventual_period(quotients: &[BigInt]) -> Option<(usize, usize)> {
    let n = quotients.len();
    for p in 1..=n / 3 {
        for s in 0..=n / 2 {
            let covered = n - s;
            if covered < (3 * p).max(12) {
                break;
            }
            if (s..n - p).all(|i| quotients[i] == quotients[i + p]) {
                return Some((s, p));
            }
        }
    }
    None
}

/// C = |λ|/|q₁⋯qₙ| for α = λ·(p₁/q₁, …, pₙ/qₙ): a lower bound for every
/// non-zero |⟨ξ,α⟩|.
pub fn rational_dependence_constant(lambda: f64, fractions: &[(i64, i64)]) -> Result<f64> {
    if !lambda.is_finite() || lambda == 0.0 {
        return Err(Error::InvalidArgument("lambda must be finite and non-zero".into()));
    }
    let mut prod = 1.0f64;
    for &(_, q) in fractions {
        if q == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        prod *= (q as f64).abs();
    }
    Ok(lambda.abs() / prod)
}

/// The same bound for an exact direction, using each coordinate's reduced
/// denominator.
pub fn rational_dependence_constant_of(dir: &Direction) -> Option<f64> {
    let values = dir.exact_values()?;
    let prod = values.iter().fold(BigInt::one(), |acc, v| acc * v.denom());
    Some(rational_to_f64(&BigRational::new(BigInt::one(), prod)))
}

/// L_b = Σ_{j=1..b} 10^{−j!}, as a double and exactly.
pub fn liouville_direction(blocks: u32) -> Result<(f64, BigRational)> {
    if blocks == 0 || blocks > 5 {
        return Err(Error::InvalidArgument(format!("blocks must lie in 1..=5, got {blocks}")));
    }
    let ten = BigInt::from(10);
    let mut sum = BigRational::zero();
    let mut fact = 1usize;
    for j in 1..=blocks as usize {
        fact *= j;
        sum += BigRational::new(BigInt::one(), num_traits::pow(ten.clone(), fact));
    }
    Ok((rational_to_f64(&sum), sum))
}

/// Denominators 10^{j!} of the Liouville truncations, with numerators
/// p_j = 10^{j!}·L_j.
pub fn liouville_truncations(blocks: u32) -> Result<Vec<(BigInt, BigInt)>> {
    (1..=blocks)
        .map(|j| {
            let (_, l) = liouville_direction(j)?;
            Ok((l.numer().clone(), l.denom().clone()))
        })
        .collect()
}

/// The golden ratio (1+√5)/2.
pub fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// One coordinate of a direction literal.
#[derive(Debug, Clone)]
enum Token {
    Float(f64),
    Exact(BigRational),
    /// Exact rational standing in for an irrational.
    Surrogate(BigRational),
}

fn parse_token(raw: &str) -> Result<Token> {
    let t = raw.trim();
    let lower = t.to_ascii_lowercase();
    match lower.as_str() {
        "phi" => return Ok(Token::Float(golden_ratio())),
        "sqrt2" => return Ok(Token::Float(2f64.sqrt())),
        "pi" => return Ok(Token::Float(PI)),
        "e" => return Ok(Token::Float(std::f64::consts::E)),
        _ => {}
    }
    if let Some(b) = lower.strip_prefix('l') {
        let blocks: u32 = b.parse().map_err(|_| Error::Parse(format!("bad Liouville token {t:?}")))?;
        return Ok(Token::Surrogate(liouville_direction(blocks)?.1));
    }
    let integer_like = !t.is_empty() && t.trim_start_matches(['-', '+']).chars().all(|c| c.is_ascii_digit());
    if t.contains('/') || integer_like {
        return parse_rational(t).map(Token::Exact).ok_or_else(|| Error::Parse(format!("bad rational {t:?}")));
    }
    t.parse::<f64>().map(Token::Float).map_err(|_| Error::Parse(format!("bad direction coordinate {t:?}")))
}

/// Parsed direction literal.
#[derive(Debug, Clone)]
pub struct DirectionSpec {
    pub direction: Direction,
    /// Every coordinate is an integer or `p/q` literal.
    pub rational: bool,
    /// Some coordinate is a Liouville truncation `L<b>`.
    pub surrogate: bool,
}

/// Parses comma-separated coordinates: decimals (floating), integers and
/// `p/q` (exact), `phi`, `sqrt2`, `pi`, `e`, and `L1`…`L5` (exact Liouville
/// truncations). The direction carries an exact form when no coordinate is
/// floating.
pub fn parse_direction(s: &str) -> Result<DirectionSpec> {
    let tokens = s.split(',').map(parse_token).collect::<Result<Vec<_>>>()?;
    if tokens.is_empty() {
        return Err(Error::Parse("empty direction".into()));
    }
    let floating = tokens.iter().any(|t| matches!(t, Token::Float(_)));
    let surrogate = tokens.iter().any(|t| matches!(t, Token::Surrogate(_)));
    let direction = if floating {
        Direction::new(
            tokens
                .iter()
                .map(|t| match t {
                    Token::Float(v) => *v,
                    Token::Exact(r) | Token::Surrogate(r) => rational_to_f64(r),
                })
                .collect(),
        )
    } else {
        let exact: Vec<BigRational> = tokens
            .into_iter()
            .map(|t| match t {
                Token::Exact(r) | Token::Surrogate(r) => r,
                Token::Float(_) => unreachable!(),
            })
            .collect();
        Direction::from_rationals(&exact)
    };
    Ok(DirectionSpec { rational: !floating && !surrogate, surrogate, direction })
}

/// Margins at the convergent pairs ξ = (q_k, p_k) of x = −α₁/α₂ for a
/// planar direction, restricted to |ξ| ≤ radius.
pub fn convergent_margins(dir: &Direction, delta: f64, radius: f64, depth: usize) -> Result<Vec<(Vec<i64>, f64)>> {
    if dir.dim() != 2 || dir.alpha[1] == 0.0 {
        return Err(Error::InvalidArgument("convergent margins need a planar direction with α₂ ≠ 0".into()));
    }
    let cf = match dir.exact_values() {
        Some(v) => continued_fraction_exact(&(-(&v[0] / &v[1])), depth)?,
        None => match continued_fraction(-dir.alpha[0] / dir.alpha[1], depth) {
            Ok(cf) => cf,
            Err(Error::PrecisionExhausted { partial }) => *partial,
            Err(e) => return Err(e),
        },
    };
    let mut out = Vec::new();
    for (p, q) in &cf.convergents {
        let (Some(p), Some(q)) = (p.to_i64(), q.to_i64()) else { break };
        let xi = vec![q, p];
        let n2 = norm2(&xi);
        if (n2 as f64).sqrt() > radius {
            break;
        }
        let (dot, zero) = dir.dot(&xi);
        if !zero {
            out.push((xi, lattice_margin(dot, n2, delta)));
        }
    }
    Ok(out)
}

/// Signed value of ⟨ξ,α⟩ for the Liouville pair ξ = (−p, q).
pub fn pair_margin(dir: &Direction, p: &BigInt, q: &BigInt, delta: f64) -> Option<(Vec<i64>, f64, bool)> {
    let xi = vec![(-p).to_i64()?, q.to_i64()?];
    let (dot, zero) = dir.dot(&xi);
    Some((xi.clone(), lattice_margin(dot, norm2(&xi), delta), zero))
}
