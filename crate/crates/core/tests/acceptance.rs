//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::f64::consts::TAU;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use lie_poincare::diophantine::{golden_ratio, lattice_minimum, liouville_direction, liouville_truncations, pair_margin};
use lie_poincare::fourier::{l2_norm, su2_dual_range, torus_field_symbols, Direction};
use lie_poincare::poincare::{composed_inequality_check, counterexample_sequence, derived_c, gate_scan, poincare_quotient, project_ker_perp, Constraint};
use lie_poincare::rng::SplitMix64;
use lie_poincare::solvability::{annihilator_check, solvability_gate, solve_fourier, torus_nonsolvable_witness, torus_solvability_gate, SolvabilityVerdict, DEFAULT_RESIDUAL_TOL};
use lie_poincare::spectral::{ker_perp_projector, record_of, DEFAULT_RANK_TOL};
use lie_poincare::su2::{c1_expected_spectrum, c1_matrix, c2_expected_spectrum, c2_matrix, sigma_basis_field, su2_field_symbols, tridiagonal_eigenvalues};
use lie_poincare::tube::{apply_y, conjugation_residual, constant_transfer, grid_quotient, psi_transform, reduced_symbol, tube_gate, InnerField, Profile, PsiDirection, TubeGrid};
use lie_poincare::{CMatrix, DualIndex, FourierData, Group, SymbolBlock, SymbolMap};

const TOL: f64 = DEFAULT_RANK_TOL;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit_alpha(rng: &mut SplitMix64) -> [f64; 3] {
    let v = rng.unit_vector(3);
    [v[0], v[1], v[2]]
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn tridiagonal_lemma() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(1);
    let mut worst: f64 = 0.0;
    for ell in 0..=20 {
        for _ in 0..50 {
            let theta = rng.uniform_range(0.0, TAU);
            let e1 = tridiagonal_eigenvalues(&c1_matrix(ell, theta)).map_err(|e| e.to_string())?;
            let e2 = tridiagonal_eigenvalues(&c2_matrix(ell, theta)).map_err(|e| e.to_string())?;
            check(e1.len() == 2 * ell as usize + 2 && e2.len() == 2 * ell as usize + 1, || format!("wrong sizes at l={ell}"))?;
            worst = worst.max(max_diff(&e1, &c1_expected_spectrum(ell))).max(max_diff(&e2, &c2_expected_spectrum(ell)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst < 1e-9, || format!("max eigenvalue error {worst:.3e}"))?;
    check(secs < 10.0, || format!("took {secs:.2}s"))?;
    Ok(format!("max error {worst:.2e} within the 10s budget"))
}

fn s3_constant() -> Outcome {
    let mut rng = SplitMix64::new(2);
    let range = su2_dual_range(40);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let alpha = unit_alpha(&mut rng);
        let sigma = su2_field_symbols(&alpha, 40);
        let report = gate_scan(&sigma, 1.0, &range, TOL).map_err(|e| e.to_string())?;
        let c = report.empirical_c.ok_or("no empirical constant")?;
        worst = worst.max((c - 0.5).abs());
        for idx in &range[1..] {
            let DualIndex::Su2 { two_ell } = idx else { unreachable!() };
            let lam = record_of(idx, &sigma[idx], TOL).map_err(|e| e.to_string())?.lambda_min_pos.ok_or("zero block")?;
            let expected = if two_ell % 2 == 0 { 1.0 } else { 0.5 };
            worst = worst.max((lam - expected).abs());
        }
    }
    check(worst < 1e-9, || format!("max deviation {worst:.3e}"))?;
    Ok(format!("C = 1/2 and per-block minima to {worst:.2e}"))
}

fn s3_no_mean_zero() -> Outcome {
    let mut rng = SplitMix64::new(3);
    let range = su2_dual_range(40);
    let mut worst_lam: f64 = 0.0;
    let mut worst_q: f64 = 0.0;
    for _ in 0..100 {
        let alpha = unit_alpha(&mut rng);
        let sigma = su2_field_symbols(&alpha, 40);
        for idx in range.iter().filter(|i| matches!(i, DualIndex::Su2 { two_ell } if two_ell % 2 == 0 && *two_ell > 0)) {
            let rec = record_of(idx, &sigma[idx], TOL).map_err(|e| e.to_string())?;
            worst_lam = worst_lam.max(*rec.singular_values.last().unwrap());
        }
        let w = counterexample_sequence(&sigma, 1.0, &range, 1, Constraint::MeanZero, TOL).map_err(|e| e.to_string())?;
        let w = w.first().ok_or("no witness")?;
        check((l2_norm(&w.data) - 1.0).abs() < 1e-12, || format!("witness norm {}", l2_norm(&w.data)))?;
        check(w.data.entries.keys().all(|i| !i.is_trivial()), || "witness is not mean-zero".into())?;
        worst_q = worst_q.max(w.quotient);
    }
    check(worst_lam < 1e-9, || format!("lambda_min {worst_lam:.3e} at an integer l"))?;
    check(worst_q < 1e-9, || format!("witness quotient {worst_q:.3e}"))?;
    Ok(format!("max lambda_min {worst_lam:.2e}, max witness quotient {worst_q:.2e}"))
}

fn quotient_lower_bound() -> Outcome {
    let mut rng = SplitMix64::new(4);
    let range = su2_dual_range(49);
    let mut min_q = f64::INFINITY;
    for _ in 0..10 {
        let alpha = unit_alpha(&mut rng);
        let sigma = su2_field_symbols(&alpha, 49);
        let report = gate_scan(&sigma, 1.0, &range, TOL).map_err(|e| e.to_string())?;
        let c = report.empirical_c.ok_or("no constant")?;
        let derived = report.derived_c.ok_or("no derived constant")?;
        // at δ = 1: √3·C/2
        let symbolic = 3f64.sqrt() * c / 2.0;
        check((derived - symbolic).abs() < 1e-12, || format!("derived_c {derived} vs {symbolic}"))?;
        check((derived - derived_c(c, 1.0, report.c1)).abs() == 0.0, || "derived_c disagrees with the report".into())?;
        let perp: Vec<CMatrix> = range.iter().map(|i| ker_perp_projector(&sigma[i], TOL)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        for trial in 0..100 {
            // half the trials damp high ℓ so that low modes dominate
            let damp = trial % 2 == 1;
            let f = FourierData::random(Group::Su2, &range, &mut rng).map(|idx, m| {
                let pos = range.binary_search(idx).unwrap();
                let g = &perp[pos] * m;
                if damp { g.scale_real((idx.dim() as f64).powi(-3)) } else { g }
            });
            let q = poincare_quotient(&f, &sigma, 1.0).map_err(|e| e.to_string())?;
            check(q >= 0.5 - 1e-10, || format!("quotient {q} below 1/2"))?;
            check(q >= derived, || format!("quotient {q} below derived_c {derived}"))?;
            min_q = min_q.min(q);
        }
    }
    Ok(format!("1000 trials over 50 modes, min quotient {min_q:.12}"))
}

fn casimir() -> Outcome {
    let mut worst: f64 = 0.0;
    for two_ell in 0..=40u32 {
        let d = two_ell as usize + 1;
        let mut sum = CMatrix::zeros(d, d);
        for j in 1..=3 {
            let s = sigma_basis_field(two_ell, j).map_err(|e| e.to_string())?.matrix;
            sum = &sum + &(&s * &s);
        }
        let ell = two_ell as f64 / 2.0;
        let target = CMatrix::identity(d).scale_real(-ell * (ell + 1.0));
        worst = worst.max((&sum - &target).max_abs());
    }
    check(worst < 1e-10, || format!("Casimir error {worst:.3e}"))?;
    Ok(format!("max error {worst:.2e}"))
}

fn golden_torus() -> Outcome {
    let phi = golden_ratio();
    let dir = Direction::new(vec![1.0, phi]);
    let cert = lattice_minimum(&dir, 2.0, 1e4).map_err(|e| e.to_string())?;
    let c = cert.empirical_c.ok_or("no constant")?;
    // independent oracle: every point of the square, keeping the disk
    let r = 10_000i64;
    let oracle = (-r..=r)
        .into_par_iter()
        .map(|y| {
            let mut best = f64::INFINITY;
            for x in -r..=r {
                let n2 = x * x + y * y;
                if n2 == 0 || n2 > r * r {
                    continue;
                }
                let dot = x as f64 + y as f64 * phi;
                best = best.min(dot.abs() * (n2 as f64).sqrt());
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    check(c == oracle, || format!("empirical_C {c:e} vs oracle {oracle:e}"))?;
    check(c > 0.35, || format!("empirical_C {c}"))?;
    let xi = cert.witness_xi.ok_or("no minimizer")?;
    // ξ = ±(−F_{n+1}, F_n): F_{n+1}/F_n is a convergent of φ
    let (a, b) = (xi[0].unsigned_abs(), xi[1].unsigned_abs());
    let mut fib = (1u64, 1u64);
    while fib.0 < b {
        fib = (fib.1, fib.0 + fib.1);
    }
    check(b == fib.0 && a == fib.1 && xi[0] * xi[1] < 0, || format!("minimizer {xi:?} is not a convergent pair of phi"))?;
    Ok(format!("C = {c:.15} equals the brute-force value, minimizer {xi:?} = (F, -F') convergent"))
}

fn liouville_failure() -> Outcome {
    let (_, l4) = liouville_direction(4).map_err(|e| e.to_string())?;
    let dir = Direction::from_rationals(&[BigRational::one(), l4.clone()]);
    // truncation pairs (k, m) = (−p_j, q_j): margins of ∂_t + a₀∂_x at δ = 1
    let truncs = liouville_truncations(4).map_err(|e| e.to_string())?;
    let mut margins = Vec::new();
    for (p, q) in &truncs[..3] {
        let (_, m, zero) = pair_margin(&dir, p, q, 1.0).ok_or("truncation does not fit in i64")?;
        check(!zero, || "unexpected kernel mode".into())?;
        margins.push(m);
    }
    let (p4, q4) = &truncs[3];
    let exact = |a0: &BigRational| (BigRational::from_integer(-p4.clone()) + BigRational::from_integer(q4.clone()) * a0).abs();
    let fourth = exact(&l4);
    check(fourth.is_zero(), || "fourth truncation is not a kernel mode of L4".into())?;
    margins.push(0.0);
    for w in margins.windows(2) {
        check(w[1] * 10.0 <= w[0], || format!("margins {margins:?} do not drop 10x"))?;
    }
    // with one more block the fourth truncation is an approximation again
    let (_, l5) = liouville_direction(5).map_err(|e| e.to_string())?;
    let l5_fourth = exact(&l5);
    let ten = BigInt::from(10);
    check(l5_fourth == BigRational::new(BigInt::one(), num_traits::pow(ten, 96)), || format!("L5 fourth margin {l5_fourth}"))?;

    let report = torus_solvability_gate(&dir, 1.1e6).map_err(|e| e.to_string())?;
    check(matches!(report.verdict, SolvabilityVerdict::EvidenceFail { .. }), || format!("solvability verdict {:?}", report.fit))?;
    let w = torus_nonsolvable_witness(&dir, 1.1e6, TOL).map_err(|e| e.to_string())?;
    let indices: Vec<DualIndex> = w.data.entries.keys().cloned().collect();
    let sigma = torus_field_symbols(&dir, &indices).map_err(|e| e.to_string())?;
    check(annihilator_check(&w.data, &sigma, TOL, DEFAULT_RESIDUAL_TOL).map_err(|e| e.to_string())?, || "witness fails the annihilator check".into())?;
    let sol = solve_fourier(&sigma, &w.data, None, TOL, DEFAULT_RESIDUAL_TOL).map_err(|e| e.to_string())?;
    for row in &sol.rows {
        check(row.solution_norm >= 1.0 - 1e-12, || format!("preimage norm {} at {}", row.solution_norm, row.index))?;
    }
    let l5_value = l5_fourth.to_f64().unwrap_or(0.0);
    Ok(format!(
        "truncation margins {:.5e} {:.1e} {:.1e} then kernel (L5: {l5_value:.0e}); evidence-fail with {} witness indices, all preimages >= 1",
        margins[0],
        margins[1],
        margins[2],
        w.rows.len()
    ))
}

fn tube_conjugation() -> Outcome {
    let profile = Profile::new(golden_ratio(), vec![], vec![1.0]);
    let var = profile.var_a();
    check((var - 1.0).abs() < 1e-12, || format!("var(a) = {var}"))?;
    let range: Vec<DualIndex> = (-8..=8).map(|m| DualIndex::torus(&[m])).collect();
    let sigma = torus_field_symbols(&Direction::new(vec![1.0]), &range).map_err(|e| e.to_string())?;
    let y0 = tube_gate(&profile, &InnerField::Blocks { sigma: &sigma, range: &range }, 2.0, 32, TOL).map_err(|e| e.to_string())?;
    let c = constant_transfer(y0.derived_c.ok_or("no derived constant")?, 1.0, 2.0);
    let mut reduced = SymbolMap::new();
    let mut tube_range = Vec::new();
    for idx in &range {
        for k in -32..=32 {
            let b = reduced_symbol(k, profile.a0(), &SymbolBlock::new(idx.clone(), sigma[idx].clone()));
            tube_range.push(b.index.clone());
            reduced.insert(b.index, b.matrix);
        }
    }
    let group = Group::Tube(Box::new(Group::Torus(1)));
    let mut rng = SplitMix64::new(8);
    let (mut worst_conj, mut worst_iso, mut min_q): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for trial in 0..100 {
        let damp = trial % 2 == 1;
        let raw = FourierData::random(group.clone(), &tube_range, &mut rng).map(|idx, m| if damp { m.scale_real(idx.combined_weight().powi(-3)) } else { m.clone() });
        let f = project_ker_perp(&raw, &reduced, TOL).map_err(|e| e.to_string())?;
        let grid = TubeGrid::from_modes(&f, 256).map_err(|e| e.to_string())?;
        let (res, norm) = conjugation_residual(&grid, &profile, &sigma).map_err(|e| e.to_string())?;
        worst_conj = worst_conj.max(res / norm);
        let psi = psi_transform(&grid, &profile, &sigma, PsiDirection::Forward).map_err(|e| e.to_string())?;
        worst_iso = worst_iso.max((psi.l2_norm() - norm).abs() / norm);
        let q = grid_quotient(&psi, &apply_y(&psi, &profile, &sigma).map_err(|e| e.to_string())?, 2.0).map_err(|e| e.to_string())?;
        min_q = min_q.min(q);
    }
    check(worst_conj < 1e-8, || format!("conjugation residual {worst_conj:.3e}"))?;
    check(worst_iso < 1e-12, || format!("isometry error {worst_iso:.3e}"))?;
    check(min_q >= c - 1e-8, || format!("tube quotient {min_q} below transferred constant {c}"))?;
    Ok(format!("residual {worst_conj:.2e}, isometry {worst_iso:.2e}, min quotient {min_q:.4} >= {c:.4}"))
}

fn solver_duality() -> Outcome {
    let sigma = su2_field_symbols(&[0.0, 0.0, 1.0], 40);
    let range = su2_dual_range(40);
    let report = solvability_gate(&sigma, &range, TOL).map_err(|e| e.to_string())?;
    let SolvabilityVerdict::EvidencePass { c, k } = report.verdict else {
        return Err(format!("verdict {:?}", report.verdict));
    };
    check(k == 0 && (c - 0.5).abs() < 1e-9, || format!("evidence-pass(C={c}, k={k})"))?;
    let mut rng = SplitMix64::new(9);
    let (mut worst_res, mut worst_growth): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let f = project_ker_perp(&FourierData::random(Group::Su2, &range, &mut rng), &sigma, TOL).map_err(|e| e.to_string())?;
        let sol = solve_fourier(&sigma, &f, Some((c, k)), TOL, DEFAULT_RESIDUAL_TOL).map_err(|e| e.to_string())?;
        for row in &sol.rows {
            let abs_res = row.residual * row.rhs_norm;
            worst_res = worst_res.max(abs_res / row.rhs_norm.max(1.0));
            check(abs_res < 1e-12 * row.rhs_norm.max(1.0), || format!("residual {abs_res:e} at {}", row.index))?;
            check(row.solution_norm <= 2.0 * row.rhs_norm * (1.0 + 1e-12), || format!("growth at {}", row.index))?;
            check(row.solution_norm <= row.bound.unwrap() * row.rhs_norm * (1.0 + 1e-12), || format!("bound at {}", row.index))?;
        }
        worst_growth = worst_growth.max(sol.max_growth);
    }
    Ok(format!("evidence-pass(C={c}, k=0), residual {worst_res:.2e}, growth {worst_growth:.6}"))
}

fn composed() -> Outcome {
    let mut rng = SplitMix64::new(10);
    let alpha = unit_alpha(&mut rng);
    let sigma = su2_field_symbols(&alpha, 20);
    let r = composed_inequality_check(&sigma, 1.0, &su2_dual_range(20), 100, &mut rng, TOL).map_err(|e| e.to_string())?;
    check(r.holds && r.min_slack_composed >= -1e-9 && r.min_slack_iterated >= -1e-9, || format!("{r:?}"))?;
    Ok(format!("min relative slack {:.3e} and {:.3e}", r.min_slack_composed, r.min_slack_iterated))
}

fn main() {
    lie_poincare::init_thread_pool_from_env();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("tridiagonal eigenvalue lemma", tridiagonal_lemma),
        ("S3 Poincare constant", s3_constant),
        ("S3 has no mean-zero inequality", s3_no_mean_zero),
        ("quotient lower bound", quotient_lower_bound),
        ("Casimir oracle", casimir),
        ("torus golden ratio", golden_torus),
        ("Liouville failure", liouville_failure),
        ("tube conjugation", tube_conjugation),
        ("solver duality", solver_duality),
        ("composed inequality", composed),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({detail}; {secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({why}; {secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
