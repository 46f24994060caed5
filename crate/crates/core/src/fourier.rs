//! Unitary duals of Tⁿ, SU(2) and T¹×G, weights, Plancherel norms and
//! truncated matrix-valued Fourier data.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, I};
use crate::rng::SplitMix64;

/// The compact group a dual index or data family lives on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Group {
    Torus(usize),
    Su2,
    /// T¹ × inner.
    Tube(Box<Group>),
}

impl Group {
    /// Smallest non-zero Laplace eigenvalue ν_η.
    pub fn nu_eta(&self) -> f64 {
        match self {
            Group::Torus(_) => 1.0,
            Group::Su2 => 0.75,
            Group::Tube(inner) => inner.nu_eta().min(1.0),
        }
    }

    /// C₁ = 1 + 1/ν_η, so that ⟨ξ⟩² ≤ C₁ν_ξ off the trivial representation.
    pub fn c1(&self) -> f64 {
        1.0 + 1.0 / self.nu_eta()
    }

    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Torus(n) => write!(f, "torus-{n}"),
            Group::Su2 => write!(f, "su2"),
            Group::Tube(inner) => write!(f, "tube({inner})"),
        }
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "su2" {
            return Ok(Group::Su2);
        }
        if s == "t1" {
            return Ok(Group::Torus(1));
        }
        if let Some(n) = s.strip_prefix("torus-") {
            let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad torus dimension in {s:?}")))?;
            if n == 0 {
                return Err(Error::InvalidArgument("torus dimension must be at least 1".into()));
            }
            return Ok(Group::Torus(n));
        }
        if let Some(inner) = s.strip_prefix("tube(").and_then(|r| r.strip_suffix(')')) {
            return Ok(Group::Tube(Box::new(inner.parse()?)));
        }
        Err(Error::Parse(format!("unknown group tag {s:?}")))
    }
}

/// A point of the unitary dual.
///
/// The derived ordering is lexicographic within each group, which is the
/// enumeration order used everywhere.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "IndexJson", into = "IndexJson")]
pub enum DualIndex {
    Torus(Vec<i64>),
    /// Half-integer ℓ stored as 2ℓ.
    Su2 { two_ell: u32 },
    Tube { k: i64, inner: Box<DualIndex> },
}

impl DualIndex {
    pub fn torus(xi: &[i64]) -> Self {
        DualIndex::Torus(xi.to_vec())
    }

    pub fn su2(two_ell: u32) -> Self {
        DualIndex::Su2 { two_ell }
    }

    pub fn tube(k: i64, inner: DualIndex) -> Self {
        DualIndex::Tube { k, inner: Box::new(inner) }
    }

    pub fn group(&self) -> Group {
        match self {
            DualIndex::Torus(xi) => Group::Torus(xi.len()),
            DualIndex::Su2 { .. } => Group::Su2,
            DualIndex::Tube { inner, .. } => Group::Tube(Box::new(inner.group())),
        }
    }

    /// Dimension d_ξ of the representation.
    pub fn dim(&self) -> usize {
        match self {
            DualIndex::Torus(_) => 1,
            DualIndex::Su2 { two_ell } => *two_ell as usize + 1,
            DualIndex::Tube { inner, .. } => inner.dim(),
        }
    }

    /// Laplace eigenvalue ν_ξ.
    pub fn nu(&self) -> f64 {
        match self {
            DualIndex::Torus(xi) => xi.iter().map(|&x| (x as f64) * (x as f64)).sum(),
            DualIndex::Su2 { two_ell } => {
                let t = *two_ell as f64;
                t * (t + 2.0) / 4.0
            }
            DualIndex::Tube { k, inner } => (*k as f64).powi(2) + inner.nu(),
        }
    }

    /// ⟨ξ⟩ = √(1 + ν_ξ).
    pub fn weight(&self) -> f64 {
        (1.0 + self.nu()).sqrt()
    }

    /// |k| + ⟨ξ⟩ for tube indices, ⟨ξ⟩ otherwise.
    pub fn combined_weight(&self) -> f64 {
        match self {
            DualIndex::Tube { k, inner } => k.unsigned_abs() as f64 + inner.weight(),
            other => other.weight(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            DualIndex::Torus(xi) => xi.iter().all(|&x| x == 0),
            DualIndex::Su2 { two_ell } => *two_ell == 0,
            DualIndex::Tube { k, inner } => *k == 0 && inner.is_trivial(),
        }
    }

    /// Index of the contragredient representation ξ̄ when it is known
    /// without an intertwiner (tori only).
    pub fn conjugate(&self) -> Option<DualIndex> {
        match self {
            DualIndex::Torus(xi) => Some(DualIndex::Torus(xi.iter().map(|x| -x).collect())),
            DualIndex::Su2 { .. } => None,
            DualIndex::Tube { k, inner } => inner.conjugate().map(|c| DualIndex::tube(-k, c)),
        }
    }
}

impl fmt::Display for DualIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualIndex::Torus(xi) => {
                write!(f, "(")?;
                for (i, x) in xi.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            DualIndex::Su2 { two_ell } if two_ell % 2 == 0 => write!(f, "l={}", two_ell / 2),
            DualIndex::Su2 { two_ell } => write!(f, "l={two_ell}/2"),
            DualIndex::Tube { k, inner } => write!(f, "k={k};{inner}"),
        }
    }
}

/// All ξ ∈ ℤⁿ with 0 < |ξ| ≤ radius, lexicographically ordered.
pub fn torus_dual_shell(n: usize, radius: f64) -> Result<Vec<DualIndex>> {
    if n == 0 {
        return Err(Error::InvalidArgument("torus dimension must be at least 1".into()));
    }
    if !radius.is_finite() || radius < 1.0 {
        return Err(Error::InvalidArgument(format!("radius must be finite and at least 1, got {radius}")));
    }
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    let points = (2.0 * radius + 1.0).powi(n as i32);
    if points > 1e8 {
        return Err(Error::ScanTooLarge { points });
    }
    let mut out = Vec::new();
    let mut xi = vec![-r; n];
    loop {
        let norm2: f64 = xi.iter().map(|&x| (x * x) as f64).sum();
        if norm2 > 0.0 && norm2 <= r2 {
            out.push(DualIndex::Torus(xi.clone()));
        }
        // odometer increment, last coordinate fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if xi[pos] < r {
                xi[pos] += 1;
                break;
            }
            xi[pos] = -r;
        }
    }
}

/// ℓ = 0, ½, …, two_ell_max/2 in increasing order.
pub fn su2_dual_range(two_ell_max: u32) -> Vec<DualIndex> {
    (0..=two_ell_max).map(DualIndex::su2).collect()
}

/// A real direction α, optionally with an exact rational form.
///
/// The exact form is stored over a common denominator so lattice dot
/// products reduce to integer arithmetic. It matters for Liouville-type
/// directions whose tails vanish in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub alpha: Vec<f64>,
    exact: Option<ExactDirection>,
}

#[derive(Debug, Clone, PartialEq)]
struct ExactDirection {
    num: Vec<BigInt>,
    den: BigInt,
    small: Option<(Vec<i128>, i128)>,
}

impl Direction {
    pub fn new(alpha: Vec<f64>) -> Self {
        Self { alpha, exact: None }
    }

    pub fn from_rationals(values: &[BigRational]) -> Self {
        let den = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let num: Vec<BigInt> = values.iter().map(|v| v.numer() * (&den / v.denom())).collect();
        let small = num
            .iter()
            .map(ToPrimitive::to_i128)
            .collect::<Option<Vec<_>>>()
            .zip(den.to_i128());
        let alpha = values.iter().map(rational_to_f64).collect();
        Self { alpha, exact: Some(ExactDirection { num, den, small }) }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_values(&self) -> Option<Vec<BigRational>> {
        self.exact.as_ref().map(|e| e.num.iter().map(|n| BigRational::new(n.clone(), e.den.clone())).collect())
    }

    pub fn norm(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.iter().all(|a| a.is_finite())
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::new(self.alpha.iter().map(|a| a * t).collect())
    }

    /// ⟨ξ, α⟩ and whether it vanishes exactly.
    ///
    /// Without an exact form, "exactly" means the floating dot product is
    /// within 1e−14·|ξ|·‖α‖ of zero.
    pub fn dot(&self, xi: &[i64]) -> (f64, bool) {
        debug_assert_eq!(xi.len(), self.alpha.len());
        match &self.exact {
            None => {
                let d: f64 = xi.iter().zip(&self.alpha).map(|(&x, a)| x as f64 * a).sum();
                let scale = xi.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt() * self.norm();
                (d, d.abs() <= 1e-14 * scale)
            }
            Some(e) => {
                if let Some((num, den)) = &e.small {
                    let mut acc: Option<i128> = Some(0);
                    for (&x, &n) in xi.iter().zip(num) {
                        acc = acc.and_then(|a| (x as i128).checked_mul(n).and_then(|p| a.checked_add(p)));
                    }
                    if let Some(a) = acc {
                        return (small_ratio(a, *den), a == 0);
                    }
                }
                let a: BigInt = xi.iter().zip(&e.num).map(|(&x, n)| n * BigInt::from(x)).sum();
                let zero = a.is_zero();
                (rational_to_f64(&BigRational::new(a, e.den.clone())), zero)
            }
        }
    }
}

fn small_ratio(a: i128, den: i128) -> f64 {
    // a and den can both exceed 2^53; split off the integer part first.
    let q = a / den;
    let r = a % den;
    q as f64 + r as f64 / den as f64
}

/// Correctly scaled conversion that survives numerators and denominators far
/// beyond the f64 range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let n = r.numer();
    let d = r.denom();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    // Shift so the quotient carries 64 significant bits.
    let shift = 64 - (nb - db);
    let q = if shift >= 0 { (n.abs() << shift as usize) / d } else { n.abs() / (d << (-shift) as usize) };
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    let v = qf * 2f64.powi(-shift as i32);
    if n.is_negative() {
        -v
    } else {
        v
    }
}

/// A d_ξ×d_ξ symbol matrix at one dual index.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub index: DualIndex,
    pub matrix: CMatrix,
}

impl SymbolBlock {
    pub fn new(index: DualIndex, matrix: CMatrix) -> Self {
        Self { index, matrix }
    }
}

/// Symbol of an invariant operator over a finite dual range.
pub type SymbolMap = BTreeMap<DualIndex, CMatrix>;

/// Torus symbol σ_Y(ξ) = i⟨ξ, α⟩ of Y = ⟨α, ∇⟩ on the given indices.
///
/// Exactly vanishing dot products give exact zero blocks.
pub fn torus_field_symbols(direction: &Direction, range: &[DualIndex]) -> Result<SymbolMap> {
    range
        .iter()
        .map(|idx| match idx {
            DualIndex::Torus(xi) if xi.len() == direction.dim() => {
                let (d, zero) = direction.dot(xi);
                let v = if zero { Complex64::new(0.0, 0.0) } else { I * d };
                Ok((idx.clone(), CMatrix::from_diagonal(&[v])))
            }
            other => Err(Error::IncompatibleSymbol(format!("{other} is not a torus index of dimension {}", direction.dim()))),
        })
        .collect()
}

/// Truncated Fourier coefficients {f̂(ξ)} over a finite dual range.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierData {
    pub group: Group,
    pub entries: BTreeMap<DualIndex, CMatrix>,
}

impl FourierData {
    pub fn new(group: Group) -> Self {
        Self { group, entries: BTreeMap::new() }
    }

    /// Inserts a coefficient, checking its shape against the index.
    pub fn insert(&mut self, index: DualIndex, coeff: CMatrix) -> Result<()> {
        let d = index.dim();
        if coeff.rows() != d || coeff.cols() != d {
            return Err(Error::InvalidArgument(format!(
                "coefficient at {index} is {}x{}, expected {d}x{d}",
                coeff.rows(),
                coeff.cols()
            )));
        }
        if index.group() != self.group {
            return Err(Error::InvalidArgument(format!("index {index} does not belong to {}", self.group)));
        }
        self.entries.insert(index, coeff);
        Ok(())
    }

    pub fn single_mode(index: DualIndex, coeff: CMatrix) -> Result<Self> {
        let mut f = Self::new(index.group());
        f.insert(index, coeff)?;
        Ok(f)
    }

    /// Complex Gaussian coefficients on every index of `range`.
    pub fn random(group: Group, range: &[DualIndex], rng: &mut SplitMix64) -> Self {
        let entries = range
            .iter()
            .map(|idx| {
                let d = idx.dim();
                (idx.clone(), CMatrix::from_fn(d, d, |_, _| rng.complex_gaussian()))
            })
            .collect();
        Self { group, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn map(&self, mut f: impl FnMut(&DualIndex, &CMatrix) -> CMatrix) -> Self {
        Self {
            group: self.group.clone(),
            entries: self.entries.iter().map(|(k, v)| (k.clone(), f(k, v))).collect(),
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        self.map(|_, m| m.scale_real(t))
    }

    /// Entrywise linear combination a·self + b·other over the union of indices.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut entries = self.entries.iter().map(|(k, v)| (k.clone(), v.scale_real(a))).collect::<BTreeMap<_, _>>();
        for (k, v) in &other.entries {
            let term = v.scale_real(b);
            entries
                .entry(k.clone())
                .and_modify(|m: &mut CMatrix| *m = &*m + &term)
                .or_insert(term);
        }
        Self { group: self.group.clone(), entries }
    }

    /// Drops the coefficient at the trivial representation.
    pub fn mean_zero(&self) -> Self {
        Self {
            group: self.group.clone(),
            entries: self.entries.iter().filter(|(k, _)| !k.is_trivial()).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FourierDataJson::from(self)).expect("Fourier data always serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&FourierDataJson::from(self)).expect("Fourier data always serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: FourierDataJson = serde_json::from_str(s)?;
        raw.try_into()
    }
}

/// ‖f‖_{L²} = (Σ d_ξ‖f̂(ξ)‖²_HS)^{1/2}.
pub fn l2_norm(f: &FourierData) -> f64 {
    f.entries.iter().map(|(k, m)| k.dim() as f64 * m.hs_norm_sqr()).sum::<f64>().sqrt()
}

/// ‖∇f‖_{L²} = (Σ d_ξ ν_ξ ‖f̂(ξ)‖²_HS)^{1/2}.
pub fn gradient_norm(f: &FourierData) -> f64 {
    f.entries.iter().map(|(k, m)| k.dim() as f64 * k.nu() * m.hs_norm_sqr()).sum::<f64>().sqrt()
}

/// (Pf)^(ξ) = σ(ξ)·f̂(ξ).
pub fn apply_multiplier(sigma: &SymbolMap, f: &FourierData) -> Result<FourierData> {
    let mut out = FourierData::new(f.group.clone());
    for (idx, coeff) in &f.entries {
        let block = sigma.get(idx).ok_or_else(|| Error::IncompatibleSymbol(format!("no block at {idx}")))?;
        if block.rows() != coeff.rows() || block.cols() != coeff.rows() {
            return Err(Error::IncompatibleSymbol(format!(
                "block at {idx} is {}x{}, coefficient has side {}",
                block.rows(),
                block.cols(),
                coeff.rows()
            )));
        }
        out.entries.insert(idx.clone(), block * coeff);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
pub(crate) struct FourierDataJson {
    group: String,
    entries: Vec<EntryJson>,
}

/// JSON shape of a dual index: `{"index": [..]}` on tori, `{"two_ell": k}` on
/// SU(2), plus `"k"` for the T¹ frequency of a tube index.
#[derive(Serialize, Deserialize)]
struct IndexJson {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    k: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    index: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    two_ell: Option<u32>,
}

impl From<DualIndex> for IndexJson {
    fn from(index: DualIndex) -> Self {
        let (k, inner) = match index {
            DualIndex::Tube { k, inner } => (Some(k), *inner),
            other => (None, other),
        };
        match inner {
            DualIndex::Torus(xi) => Self { k, index: Some(xi), two_ell: None },
            DualIndex::Su2 { two_ell } => Self { k, index: None, two_ell: Some(two_ell) },
            DualIndex::Tube { .. } => unreachable!("nested tube indices are never constructed"),
        }
    }
}

impl TryFrom<IndexJson> for DualIndex {
    type Error = String;

    fn try_from(raw: IndexJson) -> std::result::Result<Self, String> {
        let inner = match (raw.index, raw.two_ell) {
            (Some(xi), None) if !xi.is_empty() => DualIndex::Torus(xi),
            (None, Some(t)) => DualIndex::su2(t),
            _ => return Err("each index needs exactly one of \"index\" (non-empty) or \"two_ell\"".into()),
        };
        Ok(match raw.k {
            Some(k) => DualIndex::tube(k, inner),
            None => inner,
        })
    }
}

/// One stored matrix together with its dual index.
#[derive(Serialize, Deserialize)]
pub(crate) struct EntryJson {
    #[serde(flatten)]
    pub(crate) index: DualIndex,
    pub(crate) re: Vec<Vec<f64>>,
    pub(crate) im: Vec<Vec<f64>>,
}

impl EntryJson {
    pub(crate) fn new(index: &DualIndex, m: &CMatrix) -> Self {
        Self { index: index.clone(), re: m.real_parts(), im: m.imag_parts() }
    }

    pub(crate) fn matrix(&self) -> Result<CMatrix> {
        CMatrix::from_parts(&self.re, &self.im).ok_or_else(|| Error::Parse("\"re\" and \"im\" must be rectangular and of equal shape".into()))
    }
}

impl From<&FourierData> for FourierDataJson {
    fn from(f: &FourierData) -> Self {
        Self {
            group: f.group.tag(),
            entries: f.entries.iter().map(|(k, m)| EntryJson::new(k, m)).collect(),
        }
    }
}

impl TryFrom<FourierDataJson> for FourierData {
    type Error = Error;

    fn try_from(raw: FourierDataJson) -> Result<Self> {
        let mut f = FourierData::new(raw.group.parse()?);
        for e in raw.entries {
            let m = e.matrix()?;
            f.insert(e.index, m).map_err(|err| Error::Parse(err.to_string()))?;
        }
        Ok(f)
    }
}

/// Parses a decimal or `p/q` literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let d = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(n, d);
    Some(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shell_small_cases() {
        let s = torus_dual_shell(1, 2.0).unwrap();
        assert_eq!(s, vec![DualIndex::torus(&[-2]), DualIndex::torus(&[-1]), DualIndex::torus(&[1]), DualIndex::torus(&[2])]);
        let s = torus_dual_shell(2, 1.0).unwrap();
        assert_eq!(s.len(), 4);
        for idx in &s {
            assert_eq!(idx.nu(), 1.0);
            assert!((idx.weight() - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn shell_count_matches_direct_enumeration() {
        let direct = (-3i64..=3)
            .flat_map(|a| (-3i64..=3).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                let r2 = (a * a + b * b) as f64;
                r2 > 0.0 && r2 <= 2.5 * 2.5
            })
            .count();
        assert_eq!(direct, 20);
        assert_eq!(torus_dual_shell(2, 2.5).unwrap().len(), direct);
    }

    #[test]
    fn shell_rejects_bad_input() {
        assert!(matches!(torus_dual_shell(0, 3.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(torus_dual_shell(2, f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(matches!(torus_dual_shell(2, 0.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn su2_range_dimensions() {
        let r = su2_dual_range(2);
        assert_eq!(r.iter().map(DualIndex::dim).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(r[0].nu(), 0.0);
        assert_eq!(r[0].weight(), 1.0);
        assert_eq!(r[1].nu(), 0.75);
        assert!((r[1].weight() - 7f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn norms_on_single_modes() {
        assert_eq!(l2_norm(&FourierData::new(Group::Torus(2))), 0.0);
        assert_eq!(gradient_norm(&FourierData::new(Group::Su2)), 0.0);
        let f = FourierData::single_mode(DualIndex::torus(&[1, 0]), CMatrix::from_real(1, 1, &[3.0])).unwrap();
        assert_eq!(l2_norm(&f), 3.0);
        let g = FourierData::single_mode(DualIndex::torus(&[1, 0]), CMatrix::from_real(1, 1, &[1.0])).unwrap();
        assert_eq!(gradient_norm(&g), 1.0);
        let h = FourierData::single_mode(DualIndex::su2(1), CMatrix::identity(2)).unwrap();
        assert!((l2_norm(&h) - 2.0).abs() < 1e-15);
        let mut e = CMatrix::zeros(3, 3);
        e[(0, 1)] = Complex64::new(0.6, 0.8);
        let h = FourierData::single_mode(DualIndex::su2(2), e).unwrap();
        assert!((gradient_norm(&h) - 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn multiplier_application() {
        let range = torus_dual_shell(2, 3.0).unwrap();
        let mut rng = SplitMix64::new(5);
        let f = FourierData::random(Group::Torus(2), &range, &mut rng);
        let id: SymbolMap = range.iter().map(|k| (k.clone(), CMatrix::identity(1))).collect();
        assert_eq!(apply_multiplier(&id, &f).unwrap(), f);
        let zero: SymbolMap = range.iter().map(|k| (k.clone(), CMatrix::zeros(1, 1))).collect();
        assert_eq!(l2_norm(&apply_multiplier(&zero, &f).unwrap()), 0.0);

        let dir = Direction::new(vec![1.0, 2f64.sqrt()]);
        let sigma = torus_field_symbols(&dir, &range).unwrap();
        let xi = DualIndex::torus(&[2, -1]);
        let single = FourierData::single_mode(xi.clone(), CMatrix::identity(1)).unwrap();
        let out = apply_multiplier(&sigma, &single).unwrap();
        let expected = Complex64::new(0.0, 2.0 - 2f64.sqrt());
        assert!((out.entries[&xi][(0, 0)] - expected).norm() < 1e-15);

        let mut partial = sigma.clone();
        partial.remove(&xi);
        assert!(matches!(apply_multiplier(&partial, &single), Err(Error::IncompatibleSymbol(_))));
        partial.insert(xi, CMatrix::identity(2));
        assert!(matches!(apply_multiplier(&partial, &single), Err(Error::IncompatibleSymbol(_))));
    }

    #[test]
    fn json_round_trip() {
        let mut rng = SplitMix64::new(9);
        let f = FourierData::random(Group::Su2, &su2_dual_range(3), &mut rng);
        let back = FourierData::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_json(), f.to_json());

        let t = FourierData::random(Group::Torus(2), &torus_dual_shell(2, 1.5).unwrap(), &mut rng);
        assert_eq!(FourierData::from_json(&t.to_json_pretty()).unwrap(), t);

        let tube = FourierData::single_mode(DualIndex::tube(-2, DualIndex::su2(1)), CMatrix::identity(2)).unwrap();
        let s = tube.to_json();
        assert!(s.contains("\"group\":\"tube(su2)\""));
        assert_eq!(FourierData::from_json(&s).unwrap(), tube);
    }

    #[test]
    fn json_errors_carry_position() {
        let err = FourierData::from_json("{\"group\": \"su2\",\n \"entries\": [}").unwrap_err();
        assert!(matches!(&err, Error::Parse(msg) if msg.contains("line 2")), "{err}");
        let bad_shape = r#"{"group":"su2","entries":[{"two_ell":1,"re":[[1]],"im":[[0]]}]}"#;
        assert!(matches!(FourierData::from_json(bad_shape), Err(Error::Parse(_))));
    }

    #[test]
    fn exact_directions() {
        let l = BigRational::new(BigInt::from(110001), BigInt::from(1_000_000));
        let dir = Direction::from_rationals(&[BigRational::one(), l]);
        let (d, zero) = dir.dot(&[-110001, 1_000_000]);
        assert!(zero);
        assert_eq!(d, 0.0);
        let (d, zero) = dir.dot(&[-11, 100]);
        assert!(!zero);
        assert!((d - 1e-4).abs() < 1e-19);
        // Denominator 10^30 forces the BigInt fallback for large ξ.
        let tiny = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), 30));
        let dir = Direction::from_rationals(&[BigRational::one(), tiny]);
        let (d, zero) = dir.dot(&[0, 1_000_000_000]);
        assert!(!zero);
        assert!((d - 1e-21).abs() < 1e-35);
    }

    #[test]
    fn rational_literals() {
        assert_eq!(parse_rational("0.110001").unwrap(), BigRational::new(110001.into(), 1_000_000.into()));
        assert_eq!(parse_rational("-3/7").unwrap(), BigRational::new((-3).into(), 7.into()));
        assert_eq!(parse_rational("2").unwrap(), BigRational::from_integer(2.into()));
        assert!(parse_rational("1e3").is_none());
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational(".").is_none());
    }

    #[test]
    fn big_rational_conversion() {
        let r = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), 120));
        assert!((rational_to_f64(&r) / 1e-120 - 1.0).abs() < 1e-15);
        let r = BigRational::new(BigInt::from(-7), BigInt::from(3));
        assert_eq!(rational_to_f64(&r), -7.0 / 3.0);
    }

    #[test]
    fn group_tags_round_trip() {
        for g in [Group::Torus(3), Group::Su2, Group::Tube(Box::new(Group::Torus(1))), Group::Tube(Box::new(Group::Su2))] {
            assert_eq!(g.tag().parse::<Group>().unwrap(), g);
        }
        assert_eq!(Group::Torus(2).c1(), 2.0);
        assert!((Group::Su2.c1() - 7.0 / 3.0).abs() < 1e-15);
    }

    fn small_data(seed: u64) -> FourierData {
        let mut rng = SplitMix64::new(seed);
        FourierData::random(Group::Su2, &su2_dual_range(6), &mut rng)
    }

    proptest! {
        #[test]
        fn parallelogram_law(s1 in any::<u64>(), s2 in any::<u64>()) {
            let f = small_data(s1);
            let g = small_data(s2);
            let lhs = l2_norm(&f.combine(1.0, &g, 1.0)).powi(2) + l2_norm(&f.combine(1.0, &g, -1.0)).powi(2);
            let rhs = 2.0 * l2_norm(&f).powi(2) + 2.0 * l2_norm(&g).powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }

        #[test]
        fn weight_sandwich(n in 1usize..4, two_ell in 1u32..200) {
            let idx = DualIndex::su2(two_ell);
            let c1 = Group::Su2.c1();
            prop_assert!(idx.nu() <= idx.weight().powi(2) && idx.weight().powi(2) <= c1 * idx.nu() * (1.0 + 1e-15));
            prop_assert!((idx.weight().powi(2) - idx.nu() - 1.0).abs() <= 1e-12 * (1.0 + idx.nu()));
            for xi in torus_dual_shell(n, 3.0).unwrap() {
                let w2 = xi.weight().powi(2);
                prop_assert!(xi.nu() <= w2 && w2 <= Group::Torus(n).c1() * xi.nu() * (1.0 + 1e-15));
            }
        }

        #[test]
        fn gradient_dominates_nontrivial_part(seed in any::<u64>()) {
            let f = small_data(seed);
            let restricted = FourierData {
                group: f.group.clone(),
                entries: f.entries.iter().filter(|(k, _)| k.nu() >= 1.0).map(|(k, v)| (k.clone(), v.clone())).collect(),
            };
            prop_assert!(gradient_norm(&f) >= l2_norm(&restricted));
        }
    }
}
