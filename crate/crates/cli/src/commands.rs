use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::Serialize;
use serde_json::Value;

use lie_poincare::diophantine::{
    continued_fraction, continued_fraction_exact, convergent_margins, curve_collapse_decades, decade_radii, irrationality_exponent_estimate,
    irrationality_exponent_estimate_exact, lattice_minimum, margin_curve, parse_direction, rational_dependence_constant_of, ContinuedFraction,
    DiophantineCertificate, IrrationalityEstimate, Verdict,
};
use lie_poincare::fourier::{su2_dual_range, torus_dual_shell, torus_field_symbols, Direction};
use lie_poincare::poincare::{
    counterexample_sequence, gate_scan, margin_trend, poincare_quotient, random_projected, torus_counterexample_sequence, torus_field_gate, Constraint, GateReport,
    Witness,
};
use lie_poincare::report::{margins_csv, Document};
use lie_poincare::rng::SplitMix64;
use lie_poincare::solvability::{nonsolvable_witness, solvability_gate, solve_fourier, torus_nonsolvable_witness, torus_solvability_gate, SolvabilityReport, SolveRow, WitnessRow};
use lie_poincare::spectral::{record_of, spectral_record, SpectralRecord};
use lie_poincare::su2::{sigma_su2, su2_field_symbols};
use lie_poincare::tube::{conjugation_residual, constant_transfer, psi_transform, tube_gate, tube_t2_gate, InnerField, Profile, PsiDirection, TubeGrid};
use lie_poincare::{Error, FourierData, Group, SymbolMap};
use lie_poincare::{CMatrix, DualIndex};

use crate::{Cli, Command, FieldArgs, Format, Status};

const MAX_TWO_ELL: u32 = 512;
const MAX_TRIALS: usize = 1_000_000;
const MAX_CF_DEPTH: usize = 64;
const WITNESS_COUNT: usize = 4;

pub fn validate_globals(cli: &Cli) -> Result<()> {
    ensure!(cli.rank_tol > 0.0 && cli.rank_tol < 1.0, "--rank-tol must lie in (0, 1), got {}", cli.rank_tol);
    ensure!(cli.residual_tol > 0.0 && cli.residual_tol < 1.0, "--residual-tol must lie in (0, 1), got {}", cli.residual_tol);
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    ensure!(delta.is_finite() && delta >= 1.0, "--delta must be finite and at least 1, got {delta}");
    Ok(())
}

fn check_radius(radius: f64) -> Result<()> {
    ensure!(radius.is_finite() && radius >= 1.0, "--radius must be finite and at least 1, got {radius}");
    Ok(())
}

fn check_two_ell(t: u32) -> Result<()> {
    ensure!(t <= MAX_TWO_ELL, "--two-ell-max must be at most {MAX_TWO_ELL}, got {t}");
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_fourier(path: &Path) -> Result<FourierData> {
    FourierData::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_symbols(path: &Path) -> Result<(Group, SymbolMap)> {
    let f = read_fourier(path)?;
    ensure!(!f.is_empty(), "symbol file {} has no blocks", path.display());
    Ok((f.group, f.entries))
}

fn fourier_value(f: &FourierData) -> Value {
    serde_json::from_str(&f.to_json()).expect("fourier data is valid JSON")
}

enum Field {
    Su2([f64; 3]),
    Torus(Direction),
}

fn parse_field(group: &str, alpha: &str) -> Result<Field> {
    let group: Group = group.parse()?;
    let dir = parse_direction(alpha)?.direction;
    match group {
        Group::Su2 => {
            ensure!(dir.dim() == 3, "su2 needs three alpha coefficients, got {}", dir.dim());
            Ok(Field::Su2([dir.alpha[0], dir.alpha[1], dir.alpha[2]]))
        }
        Group::Torus(n) => {
            ensure!(dir.dim() == n, "torus-{n} needs {n} alpha coefficients, got {}", dir.dim());
            Ok(Field::Torus(dir))
        }
        Group::Tube(_) => bail!("tube groups are handled by the tube subcommands"),
    }
}

fn field(args: &FieldArgs) -> Result<Field> {
    parse_field(&args.group, &args.alpha)
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, kind: &str, body: T) -> Result<()> {
    let doc = Document::new(kind, body);
    match format {
        Format::Json => out.write_all(doc.to_json().as_bytes())?,
        Format::Jsonl => out.write_all(doc.to_json_line().as_bytes())?,
        Format::Csv => bail!("csv output is not available for {kind}"),
    }
    Ok(())
}

fn status_of(v: Verdict) -> Status {
    match v {
        Verdict::Fail => Status::Fail,
        Verdict::Pass | Verdict::Inconclusive => Status::Complete,
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Status> {
    let format = cli.format.unwrap_or(Format::Json);
    match &cli.command {
        Command::Symbol { field: f, two_ell, xi } => symbol(cli, out, format, f, *two_ell, xi.as_deref()),
        Command::Spectrum { field: f, two_ell_max, radius } => spectrum(cli, out, cli.format.unwrap_or(Format::Jsonl), f, *two_ell_max, *radius),
        Command::Dioph { alpha, delta, radius, cf_depth, csv } => dioph(out, if *csv { Format::Csv } else { format }, alpha, *delta, *radius, *cf_depth),
        Command::PoincareCheck { field: f, delta, radius, two_ell_max, trials, trial_radius, mean_zero_only, csv } => {
            let opts = CheckOptions { delta: *delta, radius: *radius, two_ell_max: *two_ell_max, trials: *trials, trial_radius: *trial_radius, mean_zero_only: *mean_zero_only };
            poincare_check(cli, out, format, f, opts, csv.as_deref())
        }
        Command::Solvable { group, alpha, symbol_file, radius, two_ell_max, witness_out } => {
            solvable(cli, out, format, group.as_deref(), alpha.as_deref(), symbol_file.as_deref(), *radius, *two_ell_max, witness_out.as_deref())
        }
        Command::Solve { symbol_file, rhs_file, fit_c, fit_k } => solve(cli, out, format, symbol_file, rhs_file, fit_c.zip(*fit_k)),
        Command::Tube { profile, group, alpha, delta, kmax, radius, two_ell_max, csv } => {
            tube(cli, out, format, profile, group, alpha.as_deref(), *delta, *kmax, *radius, *two_ell_max, csv.as_deref())
        }
        Command::TubeReduce { profile, data, group, alpha, grid, inverse } => tube_reduce(out, format, profile, data, group, alpha.as_deref(), *grid, *inverse),
    }
}

#[derive(Serialize)]
struct SymbolOut {
    #[serde(flatten)]
    index: DualIndex,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    record: SpectralRecord,
}

fn parse_xi(s: &str) -> Result<Vec<i64>> {
    s.split(',').map(|t| t.trim().parse::<i64>().map_err(|_| anyhow!("bad lattice coordinate {t:?} in --xi"))).collect()
}

fn symbol(cli: &Cli, out: &mut dyn Write, format: Format, f: &FieldArgs, two_ell: Option<u32>, xi: Option<&str>) -> Result<Status> {
    let (index, matrix) = match field(f)? {
        Field::Su2(alpha) => {
            let t = two_ell.ok_or_else(|| anyhow!("su2 needs --two-ell"))?;
            check_two_ell(t)?;
            let b = sigma_su2(t, &alpha);
            (b.index, b.matrix)
        }
        Field::Torus(dir) => {
            let xi = parse_xi(xi.ok_or_else(|| anyhow!("tori need --xi"))?)?;
            ensure!(xi.len() == dir.dim(), "--xi has {} coordinates, alpha has {}", xi.len(), dir.dim());
            let idx = DualIndex::Torus(xi);
            let mut sigma = torus_field_symbols(&dir, std::slice::from_ref(&idx))?;
            let m = sigma.remove(&idx).expect("block was just built");
            (idx, m)
        }
    };
    let record = record_of(&index, &matrix, cli.rank_tol)?;
    if format == Format::Csv {
        let mut s = String::from("index,singular_value\n");
        for v in &record.singular_values {
            writeln!(s, "\"{index}\",{v}")?;
        }
        out.write_all(s.as_bytes())?;
        return Ok(Status::Complete);
    }
    emit(out, format, "symbol", SymbolOut { re: matrix.real_parts(), im: matrix.imag_parts(), index, record })?;
    Ok(Status::Complete)
}

fn spectrum_csv_row(r: &SpectralRecord) -> String {
    let sv: Vec<String> = r.singular_values.iter().map(f64::to_string).collect();
    format!("\"{}\",{},{},{}\n", r.index, r.rank, r.lambda_min_pos.map_or(String::new(), |v| v.to_string()), sv.join(";"))
}

fn spectrum(cli: &Cli, out: &mut dyn Write, format: Format, f: &FieldArgs, two_ell_max: Option<u32>, radius: Option<f64>) -> Result<Status> {
    let field = field(f)?;
    let range: Vec<DualIndex> = match &field {
        Field::Su2(_) => {
            let t = two_ell_max.ok_or_else(|| anyhow!("su2 needs --two-ell-max"))?;
            check_two_ell(t)?;
            su2_dual_range(t)
        }
        Field::Torus(dir) => {
            let r = radius.ok_or_else(|| anyhow!("tori need --radius"))?;
            check_radius(r)?;
            let mut v = vec![DualIndex::Torus(vec![0; dir.dim()])];
            v.extend(torus_dual_shell(dir.dim(), r)?);
            v
        }
    };
    let record = |idx: &DualIndex| -> Result<SpectralRecord> {
        match &field {
            Field::Su2(alpha) => {
                let DualIndex::Su2 { two_ell } = idx else { unreachable!() };
                Ok(spectral_record(&sigma_su2(*two_ell, alpha), cli.rank_tol)?)
            }
            Field::Torus(dir) => {
                let sigma = torus_field_symbols(dir, std::slice::from_ref(idx))?;
                Ok(record_of(idx, &sigma[idx], cli.rank_tol)?)
            }
        }
    };
    match format {
        Format::Jsonl => {
            for idx in &range {
                out.write_all(Document::new("spectral-record", record(idx)?).to_json_line().as_bytes())?;
            }
        }
        Format::Csv => {
            out.write_all(b"index,rank,lambda_min_pos,singular_values\n")?;
            for idx in &range {
                out.write_all(spectrum_csv_row(&record(idx)?).as_bytes())?;
            }
        }
        Format::Json => {
            let records = range.iter().map(record).collect::<Result<Vec<_>>>()?;
            emit(out, format, "spectrum", serde_json::json!({ "records": records }))?;
        }
    }
    Ok(Status::Complete)
}

#[derive(Serialize)]
struct CurvePoint {
    radius: f64,
    empirical_c: Option<f64>,
}

#[derive(Serialize)]
struct ConvergentWitness {
    xi: Vec<i64>,
    margin: f64,
}

#[derive(Serialize)]
struct DiophOut {
    certificate: DiophantineCertificate,
    /// Some coordinate is a Liouville truncation standing in for an irrational.
    surrogate: bool,
    rational_dependence_c: Option<f64>,
    curve: Vec<CurvePoint>,
    collapse_decades: Option<f64>,
    continued_fraction: Option<ContinuedFraction>,
    irrationality: Option<IrrationalityEstimate>,
    convergent_witnesses: Vec<ConvergentWitness>,
}

/// Continued fraction and exponent estimate of x = −α₁/α₂.
fn planar_expansion(dir: &Direction, depth: usize) -> Result<(Option<ContinuedFraction>, Option<IrrationalityEstimate>)> {
    if dir.dim() != 2 || dir.alpha[1] == 0.0 {
        return Ok((None, None));
    }
    if let Some(v) = dir.exact_values() {
        let x = -(&v[0] / &v[1]);
        return Ok((Some(continued_fraction_exact(&x, depth)?), Some(irrationality_exponent_estimate_exact(&x, depth)?)));
    }
    let x = -dir.alpha[0] / dir.alpha[1];
    let cf = match continued_fraction(x, depth) {
        Ok(cf) => cf,
        Err(Error::PrecisionExhausted { partial }) => *partial,
        Err(e) => return Err(e.into()),
    };
    Ok((Some(cf), irrationality_exponent_estimate(x, depth).ok()))
}

fn dioph(out: &mut dyn Write, format: Format, alpha: &str, delta: f64, radius: f64, depth: usize) -> Result<Status> {
    check_delta(delta)?;
    check_radius(radius)?;
    ensure!((1..=MAX_CF_DEPTH).contains(&depth), "--cf-depth must lie in 1..={MAX_CF_DEPTH}, got {depth}");
    let spec = parse_direction(alpha)?;
    let dir = spec.direction;
    let certificate = lattice_minimum(&dir, delta, radius)?;
    let curve = margin_curve(&dir, delta, &decade_radii(radius))?;
    let collapse = curve_collapse_decades(&curve);
    let status = if collapse.is_some_and(|d| d > 2.0) { Status::Fail } else { Status::Complete };
    if format == Format::Csv {
        let mut s = String::from("radius,empirical_c\n");
        for (r, c) in &curve {
            writeln!(s, "{r},{}", c.map_or(String::new(), |c| c.to_string()))?;
        }
        out.write_all(s.as_bytes())?;
        return Ok(status);
    }
    let (cf, irr) = planar_expansion(&dir, depth)?;
    let witnesses = if dir.dim() == 2 && dir.alpha[1] != 0.0 { convergent_margins(&dir, delta, radius, depth)? } else { Vec::new() };
    let body = DiophOut {
        certificate,
        surrogate: spec.surrogate,
        rational_dependence_c: if spec.rational { rational_dependence_constant_of(&dir) } else { None },
        curve: curve.into_iter().map(|(radius, empirical_c)| CurvePoint { radius, empirical_c }).collect(),
        collapse_decades: collapse,
        continued_fraction: cf,
        irrationality: irr,
        convergent_witnesses: witnesses.into_iter().map(|(xi, margin)| ConvergentWitness { xi, margin }).collect(),
    };
    emit(out, format, "diophantine", body)?;
    Ok(status)
}

pub struct CheckOptions {
    delta: f64,
    radius: Option<f64>,
    two_ell_max: Option<u32>,
    trials: usize,
    trial_radius: f64,
    mean_zero_only: bool,
}

#[derive(Serialize)]
struct TrialSummary {
    constraint: Constraint,
    trials: usize,
    seed: u64,
    min_quotient: Option<f64>,
    /// min quotient ≥ derived_c; only meaningful on (ker Y)^⊥.
    above_derived_c: Option<bool>,
}

#[derive(Serialize)]
struct WitnessSummary {
    #[serde(flatten)]
    index: DualIndex,
    quotient: f64,
    margin: Option<f64>,
}

impl From<&Witness> for WitnessSummary {
    fn from(w: &Witness) -> Self {
        Self { index: w.index.clone(), quotient: w.quotient, margin: w.margin }
    }
}

#[derive(Serialize)]
struct CheckOut {
    verdict: Verdict,
    gate: GateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<TrialSummary>,
    counterexamples: Vec<WitnessSummary>,
}

fn poincare_check(cli: &Cli, out: &mut dyn Write, format: Format, f: &FieldArgs, o: CheckOptions, csv: Option<&Path>) -> Result<Status> {
    check_delta(o.delta)?;
    ensure!(o.trials <= MAX_TRIALS, "--trials must be at most {MAX_TRIALS}");
    let constraint = if o.mean_zero_only { Constraint::MeanZero } else { Constraint::KerPerp };
    let field = field(f)?;

    // gate, the symbols used for trials, and counterexample search
    let (gate, trial_sigma, trial_range, witnesses) = match &field {
        Field::Su2(alpha) => {
            let t = o.two_ell_max.ok_or_else(|| anyhow!("su2 needs --two-ell-max"))?;
            check_two_ell(t)?;
            let sigma = su2_field_symbols(alpha, t);
            let range = su2_dual_range(t);
            let gate = gate_scan(&sigma, o.delta, &range, cli.rank_tol)?.with_operator(format!("vector field alpha={alpha:?}"));
            let search = o.mean_zero_only || margin_trend(&gate) == Verdict::Fail;
            let w = if search { counterexamples(counterexample_sequence(&sigma, o.delta, &range, WITNESS_COUNT, constraint, cli.rank_tol))? } else { Vec::new() };
            (gate, sigma, range, w)
        }
        Field::Torus(dir) => {
            let r = o.radius.ok_or_else(|| anyhow!("tori need --radius"))?;
            check_radius(r)?;
            let gate = torus_field_gate(dir, o.delta, r)?;
            let search = o.mean_zero_only || margin_trend(&gate) == Verdict::Fail;
            let w = if search { counterexamples(torus_counterexample_sequence(dir, o.delta, r, WITNESS_COUNT, constraint))? } else { Vec::new() };
            let (sigma, range) = if o.trials > 0 {
                let mut range = vec![DualIndex::Torus(vec![0; dir.dim()])];
                range.extend(torus_dual_shell(dir.dim(), o.trial_radius.min(r))?);
                (torus_field_symbols(dir, &range)?, range)
            } else {
                (SymbolMap::new(), Vec::new())
            };
            (gate, sigma, range, w)
        }
    };

    let trials = (o.trials > 0).then(|| -> Result<TrialSummary> {
        let mut rng = SplitMix64::new(cli.seed);
        let mut min_q: Option<f64> = None;
        for _ in 0..o.trials {
            let data = match random_projected(&trial_sigma, &trial_range, constraint, &mut rng, cli.rank_tol) {
                Ok(d) => d,
                Err(Error::UndefinedQuotient) => bail!("the trial range carries no data off the kernel"),
                Err(e) => return Err(e.into()),
            };
            let q = poincare_quotient(&data, &trial_sigma, o.delta)?;
            min_q = Some(min_q.map_or(q, |m: f64| m.min(q)));
        }
        let above = match (constraint, min_q, gate.derived_c) {
            (Constraint::KerPerp, Some(q), Some(c)) => Some(q >= c),
            _ => None,
        };
        Ok(TrialSummary { constraint, trials: o.trials, seed: cli.seed, min_quotient: min_q, above_derived_c: above })
    });
    let trials = trials.transpose()?;

    let mut verdict = margin_trend(&gate);
    if o.mean_zero_only {
        verdict = if witnesses.iter().any(|w| w.quotient < 1e-9) || verdict == Verdict::Fail { Verdict::Fail } else { Verdict::Pass };
    }
    if trials.as_ref().and_then(|t| t.above_derived_c) == Some(false) {
        verdict = Verdict::Fail;
    }

    if let Some(p) = csv {
        std::fs::write(p, margins_csv(&gate)).with_context(|| format!("writing {}", p.display()))?;
    }
    if format == Format::Csv {
        out.write_all(margins_csv(&gate).as_bytes())?;
    } else {
        emit(out, format, "poincare-check", CheckOut { verdict, gate, trials, counterexamples: witnesses })?;
    }
    Ok(status_of(verdict))
}

fn counterexamples(r: lie_poincare::Result<Vec<Witness>>) -> Result<Vec<WitnessSummary>> {
    match r {
        Ok(w) => Ok(w.iter().map(WitnessSummary::from).collect()),
        Err(Error::NoCounterexample) => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct SolvableOut {
    #[serde(flatten)]
    report: SolvabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_rows: Option<Vec<WitnessRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_data: Option<Value>,
}

#[allow(clippy::too_many_arguments)]
fn solvable(
    cli: &Cli,
    out: &mut dyn Write,
    format: Format,
    group: Option<&str>,
    alpha: Option<&str>,
    symbol_file: Option<&Path>,
    radius: Option<f64>,
    two_ell_max: Option<u32>,
    witness_out: Option<&Path>,
) -> Result<Status> {
    let (report, witness) = if let Some(path) = symbol_file {
        let (_, sigma) = read_symbols(path)?;
        let range: Vec<DualIndex> = sigma.keys().cloned().collect();
        let report = solvability_gate(&sigma, &range, cli.rank_tol)?;
        let w = if report.is_fail() { Some(nonsolvable_witness(&sigma, &range, cli.rank_tol)?) } else { None };
        (report.with_operator(format!("symbol file {}", path.display())), w)
    } else {
        let (g, a) = group.zip(alpha).ok_or_else(|| anyhow!("give --group and --alpha, or --symbol-file"))?;
        match parse_field(g, a)? {
            Field::Su2(alpha) => {
                let t = two_ell_max.ok_or_else(|| anyhow!("su2 needs --two-ell-max"))?;
                check_two_ell(t)?;
                let sigma = su2_field_symbols(&alpha, t);
                let range = su2_dual_range(t);
                let report = solvability_gate(&sigma, &range, cli.rank_tol)?;
                let w = if report.is_fail() { Some(nonsolvable_witness(&sigma, &range, cli.rank_tol)?) } else { None };
                (report.with_operator(format!("vector field alpha={alpha:?}")), w)
            }
            Field::Torus(dir) => {
                let r = radius.ok_or_else(|| anyhow!("tori need --radius"))?;
                check_radius(r)?;
                let report = torus_solvability_gate(&dir, r)?;
                let w = if report.is_fail() { Some(torus_nonsolvable_witness(&dir, r, cli.rank_tol)?) } else { None };
                (report, w)
            }
        }
    };
    let status = if report.is_fail() { Status::Fail } else { Status::Complete };
    if let (Some(p), Some(w)) = (witness_out, &witness) {
        std::fs::write(p, w.data.to_json_pretty()).with_context(|| format!("writing {}", p.display()))?;
    }
    if format == Format::Csv {
        let mut s = String::from("index,weight,lambda_min_pos\n");
        for p in &report.pairs {
            writeln!(s, "\"{}\",{},{}", p.index, p.weight, p.lambda_min_pos)?;
        }
        out.write_all(s.as_bytes())?;
        return Ok(status);
    }
    let body = SolvableOut {
        witness_data: witness.as_ref().filter(|_| witness_out.is_none()).map(|w| fourier_value(&w.data)),
        witness_rows: witness.map(|w| w.rows),
        report,
    };
    emit(out, format, "solvability", body)?;
    Ok(status)
}

#[derive(Serialize)]
struct SolveOut {
    u: Value,
    max_residual: f64,
    max_growth: f64,
    rows: Vec<SolveRow>,
}

fn solve(cli: &Cli, out: &mut dyn Write, format: Format, symbol_file: &Path, rhs_file: &Path, fit: Option<(f64, u32)>) -> Result<Status> {
    if let Some((c, _)) = fit {
        ensure!(c.is_finite() && c > 0.0, "--fit-c must be positive, got {c}");
    }
    let (group, sigma) = read_symbols(symbol_file)?;
    let f = read_fourier(rhs_file)?;
    ensure!(f.group == group, "right-hand side lives on {}, symbols on {group}", f.group);
    let sol = solve_fourier(&sigma, &f, fit, cli.rank_tol, cli.residual_tol)?;
    if format == Format::Csv {
        let mut s = String::from("index,rhs_norm,solution_norm,residual,bound\n");
        for r in &sol.rows {
            writeln!(s, "\"{}\",{},{},{},{}", r.index, r.rhs_norm, r.solution_norm, r.residual, r.bound.map_or(String::new(), |b| b.to_string()))?;
        }
        out.write_all(s.as_bytes())?;
    } else {
        emit(out, format, "solution", SolveOut { u: fourier_value(&sol.u), max_residual: sol.max_residual, max_growth: sol.max_growth, rows: sol.rows })?;
    }
    Ok(Status::Complete)
}

#[derive(Serialize)]
struct TubeOut {
    a0: f64,
    var_a: f64,
    verdict: Verdict,
    /// constant_transfer(derived_c, var(a), δ): the constant carried to Y.
    transferred_c: Option<f64>,
    gate: GateReport,
}

fn read_profile(path: &Path) -> Result<Profile> {
    Profile::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// σ_X on the inner group with its default range.
enum Inner {
    Circle(Direction),
    Su2([f64; 3]),
}

fn inner_field(group: &str, alpha: Option<&str>) -> Result<Inner> {
    match group {
        "t1" | "torus-1" => {
            let dir = parse_direction(alpha.unwrap_or("1"))?.direction;
            ensure!(dir.dim() == 1, "t1 needs one alpha coefficient, got {}", dir.dim());
            Ok(Inner::Circle(dir))
        }
        "su2" => match parse_field("su2", alpha.ok_or_else(|| anyhow!("su2 needs --alpha"))?)? {
            Field::Su2(a) => Ok(Inner::Su2(a)),
            Field::Torus(_) => unreachable!(),
        },
        other => bail!("tube groups are t1 or su2, got {other:?}"),
    }
}

#[allow(clippy::too_many_arguments)]
fn tube(
    cli: &Cli,
    out: &mut dyn Write,
    format: Format,
    profile: &Path,
    group: &str,
    alpha: Option<&str>,
    delta: Option<f64>,
    kmax: u64,
    radius: Option<f64>,
    two_ell_max: Option<u32>,
    csv: Option<&Path>,
) -> Result<Status> {
    ensure!(kmax <= 1_000_000_000, "--kmax must be at most 1e9");
    let profile = read_profile(profile)?;
    let inner = inner_field(group, alpha)?;
    let Some(delta) = delta else {
        let Inner::Circle(dir) = &inner else { bail!("--delta is required on su2") };
        ensure!(dir.alpha == [1.0], "the recommended delta is only available for X = d/dx; pass --delta");
        let r = radius.ok_or_else(|| anyhow!("t1 needs --radius"))?;
        check_radius(r)?;
        let report = tube_t2_gate(&profile, &[], kmax, r)?;
        if let Some(p) = csv {
            std::fs::write(p, margins_csv(&report.report)).with_context(|| format!("writing {}", p.display()))?;
        }
        let status = status_of(report.verdict);
        if format == Format::Csv {
            out.write_all(margins_csv(&report.report).as_bytes())?;
        } else {
            emit(out, format, "tube-t2", report)?;
        }
        return Ok(status);
    };
    check_delta(delta)?;
    let gate = match &inner {
        Inner::Circle(dir) => {
            let r = radius.ok_or_else(|| anyhow!("t1 needs --radius"))?;
            check_radius(r)?;
            tube_gate(&profile, &InnerField::Torus { direction: dir, radius: r }, delta, kmax, cli.rank_tol)?
        }
        Inner::Su2(a) => {
            let t = two_ell_max.ok_or_else(|| anyhow!("su2 needs --two-ell-max"))?;
            check_two_ell(t)?;
            let sigma = su2_field_symbols(a, t);
            let range = su2_dual_range(t);
            tube_gate(&profile, &InnerField::Blocks { sigma: &sigma, range: &range }, delta, kmax, cli.rank_tol)?
        }
    };
    if let Some(p) = csv {
        std::fs::write(p, margins_csv(&gate)).with_context(|| format!("writing {}", p.display()))?;
    }
    let verdict = margin_trend(&gate);
    if format == Format::Csv {
        out.write_all(margins_csv(&gate).as_bytes())?;
    } else {
        let var_a = profile.var_a();
        let body = TubeOut { a0: profile.a0(), var_a, verdict, transferred_c: gate.derived_c.map(|c| constant_transfer(c, var_a, delta)), gate };
        emit(out, format, "tube", body)?;
    }
    Ok(status_of(verdict))
}

#[derive(Serialize)]
struct ReduceOut {
    a0: f64,
    grid: usize,
    direction: PsiDirection,
    /// ‖Ψ⁻¹YΨf − Y₀f‖ on the grid.
    conjugation_residual: f64,
    norm: f64,
    psi: Value,
}

#[allow(clippy::too_many_arguments)]
fn tube_reduce(out: &mut dyn Write, format: Format, profile: &Path, data: &Path, group: &str, alpha: Option<&str>, grid: Option<usize>, inverse: bool) -> Result<Status> {
    let profile = read_profile(profile)?;
    let f = read_fourier(data)?;
    let Group::Tube(inner_group) = &f.group else { bail!("{} holds {} data, expected tube data", data.display(), f.group) };
    let inner = inner_field(group, alpha)?;
    let mut inner_range: Vec<DualIndex> = Vec::new();
    let mut kmax = 0u64;
    for idx in f.entries.keys() {
        let DualIndex::Tube { k, inner } = idx else { unreachable!() };
        kmax = kmax.max(k.unsigned_abs());
        if inner_range.last() != Some(inner) {
            inner_range.push((**inner).clone());
        }
    }
    inner_range.sort();
    inner_range.dedup();
    let sigma: SymbolMap = match &inner {
        Inner::Circle(dir) => {
            ensure!(**inner_group == Group::Torus(1), "data lives on {}, expected tube(torus-1)", f.group);
            torus_field_symbols(dir, &inner_range)?
        }
        Inner::Su2(a) => {
            ensure!(**inner_group == Group::Su2, "data lives on {}, expected tube(su2)", f.group);
            inner_range.iter().map(|i| (i.clone(), sigma_su2(i.dim() as u32 - 1, a).matrix)).collect::<std::collections::BTreeMap<DualIndex, CMatrix>>()
        }
    };
    let n = match grid {
        Some(n) => n,
        None => (4 * (2 * kmax as usize + 1)).next_power_of_two().max(256),
    };
    let g = TubeGrid::from_modes(&f, n)?;
    let direction = if inverse { PsiDirection::Inverse } else { PsiDirection::Forward };
    let psi = psi_transform(&g, &profile, &sigma, direction)?;
    let (residual, norm) = conjugation_residual(&g, &profile, &sigma)?;
    let body = ReduceOut { a0: profile.a0(), grid: n, direction, conjugation_residual: residual, norm, psi: fourier_value(&psi.to_modes()) };
    emit(out, format, "tube-reduce", body)?;
    Ok(Status::Complete)
}
