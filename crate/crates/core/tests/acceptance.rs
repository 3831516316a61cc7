//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use serrematch_core::counting::{
    calibrate_correction, count_projective, schoen_form, singular_points, trace_exact, CalibrationError, QuinticForm,
    TraceValue,
};
use serrematch_core::ffarith::{primes_between, Prime};
use serrematch_core::modsym::{
    cuspidal_subspace, dim_cusp_forms, rational_newforms, weil_bound, ModularSymbols, Newform,
};
use serrematch_core::serre::{level_bound, match_forms, rigid_bounds, BadPrimeSet, CompatibleSystemData, SerreBounds};
use serrematch_core::twist::{base_congruence_report, verify_twist};

/// Wall-clock budget for the headline match (single-threaded target).
const MATCH_RUNTIME_BUDGET: Duration = Duration::from_secs(600);
/// Minimum number of primes a twist check must cover.
const MIN_TWIST_PRIMES: usize = 10;
/// Prime bound for the headline match.
const MATCH_PRIME_BOUND: u64 = 97;
const TWIST_PRIME_BOUND: u64 = 47;
const ORACLE_TERMS: usize = 20;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn prime(p: u64) -> Prime {
    Prime::new(p).expect("prime")
}

fn p3(p: u64) -> u64 {
    p * p * p + p * p + p + 1
}

/// `(X0 + 2 X1 + 3 X2 - X3 + X4)^5` expanded with multinomial coefficients.
fn quintuple_hyperplane() -> QuinticForm {
    let c = [1i64, 2, 3, -1, 1];
    let fact = |n: u8| (1..=n as i64).product::<i64>();
    let mut terms = Vec::new();
    for a in 0..=5u8 {
        for b in 0..=5 - a {
            for cc in 0..=5 - a - b {
                for d in 0..=5 - a - b - cc {
                    let e = [a, b, cc, d, 5 - a - b - cc - d];
                    let multinomial = fact(5) / e.iter().map(|&x| fact(x)).product::<i64>();
                    let coeff = e.iter().zip(c).map(|(&x, ci)| ci.pow(x as u32)).product::<i64>();
                    terms.push((e, multinomial * coeff));
                }
            }
        }
    }
    QuinticForm::new(terms, ["X0", "X1", "X2", "X3", "X4"]).expect("valid form")
}

fn criterion_1() -> Outcome {
    let fermat = QuinticForm::fermat();
    for p in [2u64, 3, 7, 13, 17, 23] {
        let c = count_projective(&fermat, prime(p)).map_err(|e| e.to_string())?;
        ensure(c == p3(p), || format!("Fermat count at p = {p} is {c}, expected {}", p3(p)))?;
    }
    let h = quintuple_hyperplane();
    let primes = primes_between(2, 47);
    for &p in &primes {
        let c = count_projective(&h, p).map_err(|e| e.to_string())?;
        ensure(c == p3(p.get()), || format!("hyperplane count at p = {p} is {c}"))?;
    }
    Ok(format!("Fermat at 6 primes, quintuple hyperplane at {} primes <= 47", primes.len()))
}

fn criterion_2() -> Outcome {
    let f = schoen_form(1).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    for (p, expected) in [(11u64, 125usize), (31, 125), (41, 125), (3, 1), (7, 1), (13, 1), (17, 1), (23, 1)] {
        let n = singular_points(&f, prime(p)).map_err(|e| e.to_string())?.len();
        ensure(n == expected, || format!("p = {p}: {n} singular points, expected {expected}"))?;
        seen.push(format!("{p}:{n}"));
    }
    Ok(format!("singular points {}", seen.join(" ")))
}

fn criterion_3() -> Outcome {
    let mut checked = 0;
    for n in 1..=30u64 {
        for k in [2u32, 4, 6] {
            let space = ModularSymbols::new(n, k).map_err(|e| e.to_string())?;
            let d = cuspidal_subspace(&space).dim() as u64;
            let f = dim_cusp_forms(n, k);
            ensure(d == f, || format!("N = {n}, k = {k}: modular symbols {d}, formula {f}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} spaces agree exactly"))
}

/// `q prod_{n >= 1} prod_j (1 - q^(m_j n))^(e_j)` to `q^bound`.
fn eta_quotient(factors: &[(usize, u32)], bound: usize) -> Vec<i64> {
    let mut s = vec![0i64; bound];
    s[0] = 1;
    for &(m, e) in factors {
        for n in 1..bound {
            let step = m * n;
            if step >= bound {
                break;
            }
            for _ in 0..e {
                for i in (step..bound).rev() {
                    s[i] -= s[i - step];
                }
            }
        }
    }
    let mut out = vec![0i64; bound + 1];
    out[1..].copy_from_slice(&s);
    out
}

fn single_form(level: u64, weight: u32) -> Result<Newform, String> {
    let mut d = rational_newforms(level, weight, ORACLE_TERMS as u64).map_err(|e| e.to_string())?;
    ensure(d.forms.len() == 1, || format!("({level}, {weight}) has {} rational newforms", d.forms.len()))?;
    Ok(d.forms.remove(0))
}

fn criterion_4() -> Outcome {
    for (level, weight, factors) in [(1u64, 12u32, vec![(1usize, 24u32)]), (11, 2, vec![(1, 2), (11, 2)])] {
        let f = single_form(level, weight)?;
        let eta = eta_quotient(&factors, ORACLE_TERMS);
        for n in 1..=ORACLE_TERMS {
            ensure(f.coeff(n as u64) == Some(eta[n]), || {
                format!("({level}, {weight}) a_{n} = {:?}, eta product gives {}", f.coeff(n as u64), eta[n])
            })?;
        }
    }
    Ok(format!("Delta and the level-11 form agree with eta products for n <= {ORACLE_TERMS}"))
}

fn criterion_5() -> Outcome {
    let ps = [2u64, 3, 5, 7, 11, 13];
    for (level, weight) in [(25u64, 4u32), (11, 2)] {
        let space = ModularSymbols::new(level, weight).map_err(|e| e.to_string())?;
        let cusp = cuspidal_subspace(&space);
        let ops: Vec<_> = ps.iter().map(|&p| space.hecke(&cusp, p).map(|t| t.matrix)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        for i in 0..ops.len() {
            for j in i + 1..ops.len() {
                ensure(&ops[i] * &ops[j] == &ops[j] * &ops[i], || {
                    format!("T_{} T_{} != T_{} T_{} at ({level}, {weight})", ps[i], ps[j], ps[j], ps[i])
                })?;
            }
        }
    }
    let mut forms = 0;
    for (level, weight) in [(25u64, 4u32), (11, 2), (1, 12), (5, 4), (7, 4), (14, 2), (15, 2)] {
        for f in rational_newforms(level, weight, 100).map_err(|e| e.to_string())?.forms {
            forms += 1;
            for (p, a) in f.prime_coeffs() {
                if level % p == 0 {
                    continue;
                }
                ensure(a.abs() <= weil_bound(p, weight), || format!("{}: |a_{p}| = {} over the Weil bound", f.label, a.abs()))?;
                if p * p <= 100 {
                    let expected = a * a - (p as i64).pow(weight - 1);
                    ensure(f.coeff(p * p) == Some(expected), || format!("{}: a_{} != a_{p}^2 - {p}^{}", f.label, p * p, weight - 1))?;
                }
            }
        }
    }
    Ok(format!("15 operator pairs commute on 2 spaces; Weil bound and a_(p^2) recursion hold on {forms} forms"))
}

fn criterion_6() -> Result<(String, Newform), String> {
    let start = Instant::now();
    let system = CompatibleSystemData::schoen_congruence(1).map_err(|e| e.to_string())?;
    let bounds = rigid_bounds(&system.bad).map_err(|e| e.to_string())?;
    let r = match_forms(&system, bounds, MATCH_PRIME_BOUND).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(r.unique, || format!("matches {:?}", r.matches))?;
    let f = r.forms[0].clone();
    ensure((f.level, f.weight) == (25, 4), || format!("matched {}", f.label))?;
    ensure(r.primes_checked.first() == Some(&7) && r.primes_checked.last() == Some(&97) && !r.primes_checked.contains(&5), || {
        format!("primes checked {:?}", r.primes_checked)
    })?;
    // independent recheck of every congruence, straight from the counts
    let y = schoen_form(1).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    for &p in &r.primes_checked {
        let count = count_projective(&y, prime(p)).map_err(|e| e.to_string())? as i128;
        let a = f.coeff(p).ok_or("missing coefficient")? as i128;
        if (a - (1 - count)).rem_euclid(p as i128) != 0 {
            failures.push(p);
        }
    }
    ensure(failures.is_empty(), || format!("congruence fails at {failures:?}"))?;
    ensure(elapsed <= MATCH_RUNTIME_BUDGET, || format!("took {elapsed:?}, budget {MATCH_RUNTIME_BUDGET:?}"))?;
    Ok((
        format!(
            "unique match {} over {} primes 7..97, zero congruence failures, {:.1?}",
            f.label,
            r.primes_checked.len(),
            elapsed
        ),
        f,
    ))
}

fn criterion_7(f: &Newform) -> Outcome {
    let mut notes = Vec::new();
    for d in [-1i64, 2, 3] {
        let r = verify_twist(d, TWIST_PRIME_BOUND, f).map_err(|e| e.to_string())?;
        ensure(r.passed, || format!("d = {d}: failures {:?}", r.failures))?;
        ensure(r.primes_checked.len() >= MIN_TWIST_PRIMES, || format!("d = {d}: only {} primes", r.primes_checked.len()))?;
        notes.push(format!("d={d}:{}", r.primes_checked.len()));
    }
    let twisted = verify_twist(1, TWIST_PRIME_BOUND, f).map_err(|e| e.to_string())?;
    let base = base_congruence_report(f, &twisted.primes_checked).map_err(|e| e.to_string())?;
    ensure(twisted == base, || format!("d = 1 report {twisted:?} differs from base suite {base:?}"))?;
    ensure(twisted.passed, || "base suite failed".into())?;
    Ok(format!("twists pass ({} primes each), d=1 report equals base suite", notes.join(" ")))
}

fn calibration_run(oracle: &BTreeMap<u64, i64>, calib: &[u64], valid: &[u64]) -> Result<String, String> {
    match calibrate_correction(1, oracle, calib, valid) {
        Ok(model) => {
            for &p in valid.iter().chain(calib) {
                let fd = trace_exact(1, prime(p), &model).map_err(|e| format!("trace_exact at {p}: {e}"))?;
                let TraceValue::Exact(a) = fd.a_p else { return Err("non-exact trace".into()) };
                ensure((a as i128).pow(2) <= 4 * (p as i128).pow(3), || format!("Weil bound at {p}"))?;
                ensure(a == oracle[&p], || format!("trace_exact({p}) = {a}, oracle {}", oracle[&p]))?;
            }
            Ok(format!("validated, constants {:?}", model.constants))
        }
        Err(CalibrationError::NoConsistentModel { class, primes }) => {
            Ok(format!("NoConsistentModel reported for class {class} (primes {primes:?})"))
        }
        Err(CalibrationError::ValidationFailure { model, failures }) => {
            // an honest failure report: every listed prime must really disagree
            for &(p, want, got) in &failures {
                ensure(got != Some(want), || format!("spurious failure at {p}"))?;
            }
            let uncovered: Vec<u64> = failures.iter().filter(|f| f.2.is_none()).map(|f| f.0).collect();
            Err(format!(
                "held-out residual at {:?} (no calibration data for {uncovered:?}), constants {:?}",
                failures.iter().map(|f| f.0).collect::<Vec<_>>(),
                model.constants
            ))
        }
        Err(e) => Err(e.to_string()),
    }
}

/// The listed prime sets leave the class 4 mod 5 without calibration data, so
/// zero residual there is out of reach; the failure must be reported with data.
/// A calibration set covering every class must then validate exactly.
fn criterion_8(f: &Newform) -> Outcome {
    let oracle: BTreeMap<u64, i64> = f.prime_coeffs().collect();
    let listed = calibration_run(&oracle, &[7, 11, 13, 17], &[19, 23, 29, 31, 37, 41, 43, 47]);
    let listed_note = match &listed {
        Ok(s) => s.clone(),
        Err(s) if s.starts_with("held-out residual") => format!("reported: {s}"),
        Err(s) => return Err(format!("listed primes: {s}")),
    };
    let covering = calibration_run(&oracle, &[7, 11, 13, 17, 19], &[23, 29, 31, 37, 41, 43, 47])
        .map_err(|s| format!("covering calibration: {s}"))?;
    Ok(format!("listed primes {{7,11,13,17}}: {listed_note}; with 19 added: {covering}"))
}

fn criterion_9() -> Outcome {
    let s = |ps: &[u64]| BadPrimeSet::new(ps.iter().copied()).expect("primes");
    let lb = level_bound(&s(&[2, 3, 7])).map_err(|e| e.to_string())?;
    ensure(lb == 3_048_192, || format!("level_bound({{2,3,7}}) = {lb}"))?;
    let rb = rigid_bounds(&s(&[5])).map_err(|e| e.to_string())?;
    ensure(rb == SerreBounds { n0: 25, k0: 4 }, || format!("rigid_bounds({{5}}) = {rb:?}"))?;
    let mut labels = Vec::new();
    for (level, weight) in [(11u64, 2u32), (25, 4)] {
        for f in rational_newforms(level, weight, MATCH_PRIME_BOUND).map_err(|e| e.to_string())?.forms {
            let system = CompatibleSystemData::from_newform(&f).map_err(|e| e.to_string())?;
            let bounds = rigid_bounds(&system.bad).map_err(|e| e.to_string())?;
            let r = match_forms(&system, bounds, MATCH_PRIME_BOUND).map_err(|e| e.to_string())?;
            ensure(r.unique && r.forms[0] == f, || format!("self-match of {} gave {:?}", f.label, r.matches))?;
            labels.push(f.label.clone());
        }
    }
    Ok(format!("bounds exact; self-match unique for {}", labels.join(", ")))
}

fn report(n: u32, outcome: &Outcome) -> bool {
    match outcome {
        Ok(msg) => {
            println!("PASS criterion {n}: {msg}");
            true
        }
        Err(msg) => {
            println!("FAIL criterion {n}: {msg}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= report(1, &criterion_1());
    ok &= report(2, &criterion_2());
    ok &= report(3, &criterion_3());
    ok &= report(4, &criterion_4());
    ok &= report(5, &criterion_5());
    let c6 = criterion_6();
    ok &= report(6, &c6.as_ref().map(|(s, _)| s.clone()).map_err(Clone::clone));
    match &c6 {
        Ok((_, f)) => {
            ok &= report(7, &criterion_7(f));
            ok &= report(8, &criterion_8(f));
        }
        Err(_) => {
            ok &= report(7, &Err("needs the criterion 6 match".into()));
            ok &= report(8, &Err("needs the criterion 6 match".into()));
        }
    }
    ok &= report(9, &criterion_9());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
