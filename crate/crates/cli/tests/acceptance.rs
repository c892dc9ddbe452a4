//! Exit gate: one PASS/FAIL line per acceptance criterion, written straight to
//! stdout so the lines survive the test harness' output capture.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;

use cylweight::bootstrap::{fit_decay, make_kernel_element, two_mode_coupling};
use cylweight::green::{self, solve};
use cylweight::hardy::{estimate_constant, HardyGrid};
use cylweight::index::{calibrate_and_predict, eta_numeric, index_change, mode_count_index};
use cylweight::inverse::estimate_operator_norm;
use cylweight::{
    BSide, BootstrapRun, CylField, EndWeights, Error, HardyCase, HardyVariant, InverseHandle, LinkSpectrum, ModeCase,
    PerturbationKind, PerturbationSpec, Seed, Slot, Tail, TidOperator, TimeGrid, WeightSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const GREEN_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-6;
const GLUE_TOL: f64 = 1e-9;
const T0_FACTOR: f64 = 2.0;
const PERTURBED_RESIDUAL_TOL: f64 = 1e-5;
const RATIO_MAX: f64 = 0.5;
const EXP_SPREAD: f64 = 2.0;
const ETA_TOL: f64 = 1e-6;
const RATE_REL: f64 = 0.10;
const POLY_BAND: f64 = 0.15;
const SEED_REL: f64 = 0.01;
const LOG_TOL: f64 = 1e-6;
const HARDY_SEED: u64 = 20_240_601;

fn bump(t: f64, c: f64, w: f64) -> f64 {
    let x = (t - c) / w;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Up to three smooth bumps per mode, placed relative to `t0`.
fn random_field(grid: TimeGrid, spec: &LinkSpectrum, seed: u64) -> CylField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<Vec<(f64, f64, f64)>> = (0..spec.total_dim())
        .map(|_| {
            let k = rng.gen_range(1..=3);
            (0..k).map(|_| (rng.gen_range(6.0..20.0), rng.gen_range(1.5..4.0), rng.gen_range(-2.0..2.0))).collect()
        })
        .collect();
    let times = grid.times();
    let coeffs = params
        .iter()
        .map(|ps| times.iter().map(|&t| ps.iter().map(|&(c, w, a)| a * bump(t, grid.t0 + c, w)).sum()).collect())
        .collect();
    CylField::new(grid, spec.clone(), coeffs, Tail::Compact).unwrap()
}

fn lattice(c: f64, n: usize) -> LinkSpectrum {
    LinkSpectrum::lattice(c, n).unwrap()
}

fn sphere() -> LinkSpectrum {
    LinkSpectrum::sphere_laplacian(2, 3).unwrap()
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

type Verdict = (bool, String);

fn green_exactness() -> Verdict {
    let g = TimeGrid::new(2.0, 40.0, 10_000).unwrap();
    let t0 = g.t0;
    let s = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { g.times().into_iter().map(f).collect() };
    let first = |l: f64, side| ModeCase::first_order(l, side);
    let second = |m: f64, l: f64| ModeCase::second_order(m, l, BSide::Plus).unwrap();
    let mu = second(2.0, -2.0).mu();
    let rows: Vec<(&str, ModeCase, Vec<f64>, Tail, Vec<f64>)> = vec![
        ("l=1", first(1.0, BSide::Plus), s(&|t| (-t).exp()), Tail::exp(1.0), s(&|t| -(-t).exp() / 2.0)),
        (
            "l=-1",
            first(-1.0, BSide::Plus),
            s(&|t| (-2.0 * t).exp()),
            Tail::exp(2.0),
            s(&|t| (-t).exp() * ((-t0).exp() - (-t).exp())),
        ),
        ("l=0+", first(0.0, BSide::Plus), s(&|t| t.powi(-2)), Tail::power(2.0), s(&|t| -1.0 / t)),
        ("l=0-", first(0.0, BSide::Minus), s(&|t| t.powi(-2)), Tail::power(2.0), s(&|t| 1.0 / t0 - 1.0 / t)),
        ("det=0", second(2.0, -1.0), s(&|t| (-t).exp()), Tail::exp(1.0), s(&|t| (-t).exp() / 4.0)),
        (
            "det>0",
            second(1.0, 2.0),
            s(&|t| (-3.0 * t).exp()),
            Tail::exp(3.0),
            s(&|t| -((-3.0 * t).exp() / 5.0 + (-t).exp() * ((-2.0 * t0).exp() - (-2.0 * t).exp()) / 2.0) / 3.0),
        ),
        (
            "det<0",
            second(2.0, -2.0),
            s(&|t| (-0.5 * t).exp()),
            Tail::exp(0.5),
            s(&|t| (-0.5 * t).exp() / (1.5f64.powi(2) + mu * mu)),
        ),
    ];
    let mut worst = (0.0f64, 0.0f64);
    for (name, case, f, tail, exact) in &rows {
        match solve(case, f, &g, tail) {
            Ok(sol) => {
                worst.0 = worst.0.max(max_err(&sol.u, exact));
                worst.1 = worst.1.max(green::residual(case, &g, &sol.u, f));
            }
            Err(e) => return (false, format!("{name}: {e}")),
        }
    }
    (worst.0 <= GREEN_TOL && worst.1 <= GREEN_TOL, format!("7 cases, max error {:.2e}, max residual {:.2e}", worst.0, worst.1))
}

fn right_inverse() -> Verdict {
    let g = TimeGrid::new(2.0, 40.0, 10_000).unwrap();
    let mut worst = 0.0f64;
    let mut configs = 0;
    for spec in [lattice(0.0, 3), sphere()] {
        for op in [TidOperator::first_order(spec.clone()), TidOperator::second_order(0.0, spec.clone()).unwrap()] {
            // beta = 0 is super-indicial for the second-order operators
            let betas: &[f64] = if op.order() == 1 { &[-0.5, 0.0, 0.5] } else { &[-0.5, 0.5] };
            for &beta in betas {
                for sign in [BSide::Plus, BSide::Minus] {
                    let h = InverseHandle::new(op.clone(), beta, sign, g.t0).unwrap();
                    for seed in 0..100 {
                        let f = random_field(g, op.spectrum(), seed);
                        match h.apply_q(&f).and_then(|u| h.residual_sup(&u, &f)) {
                            Ok(r) => worst = worst.max(r),
                            Err(e) => return (false, format!("order {} beta {beta}: {e}", op.order())),
                        }
                    }
                    configs += 1;
                }
            }
        }
    }
    (worst <= RESIDUAL_TOL, format!("{configs} configurations x 100 fields, max residual {worst:.2e}"))
}

fn gluing() -> Verdict {
    let g = TimeGrid::new(2.0, 40.0, 10_000).unwrap();
    let mut worst = 0.0f64;
    for c in [0.0, 0.25] {
        let op = TidOperator::first_order(lattice(c, 3));
        for beta in [0.5, 1.25] {
            let lower = op.adjacent_roots(beta).unwrap().0;
            let up = InverseHandle::new(op.clone(), beta, BSide::Plus, g.t0).unwrap();
            let down = InverseHandle::new(op.clone(), lower, BSide::Minus, g.t0).unwrap();
            for seed in 0..10 {
                let f = random_field(g, op.spectrum(), 700 + seed);
                let d = up.apply_q(&f).unwrap().max_abs_diff(&down.apply_q(&f).unwrap()).unwrap();
                worst = worst.max(d);
            }
        }
    }
    (worst <= GLUE_TOL, format!("max pointwise difference {worst:.2e}"))
}

fn t0_independence() -> Verdict {
    let op = TidOperator::first_order(lattice(0.0, 3));
    let mut detail = Vec::new();
    let mut ok = true;
    // a non-indicial weight and an indicial one with the polynomial correction
    for (beta, b) in [(0.5, 0.0), (0.0, 0.6)] {
        let est: Vec<f64> = [2.0, 20.0, 100.0]
            .iter()
            .map(|&t0| {
                let g = TimeGrid::new(t0, t0 + 38.0, 10_000).unwrap();
                let family: Vec<CylField> = (0..50).map(|s| random_field(g, op.spectrum(), 500 + s)).collect();
                let h = InverseHandle::new(op.clone(), beta, BSide::Plus, t0).unwrap();
                let w = WeightSpec::sobolev(beta, 0.0, b, 2.0).unwrap();
                estimate_operator_norm(&h, &family, &w).unwrap()
            })
            .collect();
        let hi = est.iter().copied().fold(f64::MIN, f64::max);
        let lo = est.iter().copied().fold(f64::MAX, f64::min);
        ok &= lo > 0.0 && hi / lo <= T0_FACTOR;
        detail.push(format!("beta {beta} b {b}: spread {:.3}", hi / lo));
    }
    (ok, detail.join(", "))
}

fn neumann() -> Verdict {
    let g = TimeGrid::new(2.0, 40.0, 10_000).unwrap();
    let op = TidOperator::first_order(lattice(0.0, 3));
    let base = InverseHandle::new(op.clone(), 0.5, BSide::Plus, g.t0).unwrap();
    let small = base.clone().with_perturbation(PerturbationSpec::oscillatory(0.01)).unwrap();
    let big = base.with_perturbation(PerturbationSpec::oscillatory(5.0)).unwrap();
    let (mut res, mut ratio) = (0.0f64, 0.0f64);
    let mut verdicts = true;
    for seed in 0..10 {
        let f = random_field(g, op.spectrum(), 900 + seed);
        match small.apply_q_perturbed(&f) {
            Ok((_, rep)) => {
                res = res.max(rep.residual_sup);
                ratio = ratio.max(rep.ratio);
            }
            Err(e) => return (false, format!("delta 0.01: {e}")),
        }
        verdicts &= matches!(big.apply_q_perturbed(&f), Err(Error::NonConvergent(_)));
    }
    (
        res <= PERTURBED_RESIDUAL_TOL && ratio < RATIO_MAX && verdicts,
        format!("delta 0.01: residual {res:.2e}, ratio {ratio:.2e}; delta 5 non-convergent: {verdicts}"),
    )
}

fn hardy_suite() -> Verdict {
    let grid = HardyGrid::default();
    let sup = |case: HardyCase| estimate_constant(&case, 200, HARDY_SEED, &grid).map(|e| e.sup_ratio);
    let mut witnesses = 0;
    for p in [2.0, 3.0] {
        let crit = 1.0 - 1.0 / p;
        for case in [
            HardyCase::poly(HardyVariant::PolyPlus, p, crit + 0.25).unwrap(),
            HardyCase::poly(HardyVariant::PolyMinus, p, crit - 0.25).unwrap(),
            HardyCase::new(HardyVariant::ExpPlus, p, 0.0, 1.0, 0).unwrap(),
            HardyCase::new(HardyVariant::ExpMinus, p, 0.0, -1.0, 0).unwrap(),
        ] {
            match sup(case) {
                Ok(s) if s.is_finite() => {}
                _ => witnesses += 1,
            }
        }
    }
    let poly: Vec<f64> =
        [0.6, 0.55, 0.51].iter().map(|&b| sup(HardyCase::poly(HardyVariant::PolyPlus, 2.0, b).unwrap()).unwrap()).collect();
    let monotone = poly[0] < poly[1] && poly[1] < poly[2];
    let exp: Vec<f64> = [1.0, 2.0, 8.0]
        .iter()
        .map(|&mu| sup(HardyCase::new(HardyVariant::ExpPlus, 2.0, 0.0, mu, 0).unwrap()).unwrap())
        .collect();
    let spread = exp.iter().copied().fold(f64::MIN, f64::max) / exp.iter().copied().fold(f64::MAX, f64::min);
    (
        witnesses == 0 && monotone && spread <= EXP_SPREAD,
        format!(
            "failing cases {witnesses}/8; poly_plus sups {:.4} < {:.4} < {:.4}; exp spread {spread:.4}",
            poly[0], poly[1], poly[2]
        ),
    )
}

fn index_machinery() -> Verdict {
    let op = TidOperator::first_order(lattice(0.0, 6));
    let w = |p: f64, m: f64, b: f64| EndWeights::new(p, m, b, b).unwrap();
    let got: Vec<i64> =
        [(0.0, 0.0), (0.5, 0.0), (1.5, 0.0)].iter().map(|&(p, m)| mode_count_index(&op, &w(p, m, 0.6)).unwrap().index).collect();
    let counted = got == [-1, 0, 1];
    let targets: Vec<EndWeights> = [
        (0.0, 0.0, 0.6),
        (1.5, 0.0, 0.6),
        (-1.5, 0.5, 0.6),
        (2.5, -1.0, 0.6),
        (0.25, 0.25, 0.6),
        (1.0, 1.0, 0.6),
        (0.0, 0.0, 0.4),
        (1.0, -1.0, 0.4),
        (-2.0, 2.0, 0.4),
        (3.0, 0.5, 0.4),
    ]
    .iter()
    .map(|&(p, m, b)| w(p, m, b))
    .collect();
    let rep = calibrate_and_predict(&op, &w(0.5, 0.0, 0.6), &targets).unwrap();
    let calibrated = rep.predictions.len() == 10 && rep.predictions.iter().all(|p| p.predicted == p.counted as f64);
    let pts = [-2.5, -1.0, -0.5, 0.0, 0.25, 1.0, 2.0];
    let mut cocycle = true;
    for b in [0.3, 0.7] {
        for &x in &pts {
            for &y in &pts {
                for &z in &pts {
                    let c = |a, e| index_change(&op, a, e, b).unwrap();
                    cocycle &= c(x, y) + c(y, z) == c(x, z);
                }
            }
        }
    }
    let eta = [0.1, 0.25, 0.4].iter().map(|&c| (eta_numeric(c) - (1.0 - 2.0 * c)).abs()).fold(0.0, f64::max);
    (
        counted && calibrated && cocycle && eta <= ETA_TOL,
        format!("indices {got:?}; calibration exact: {calibrated}; cocycle: {cocycle}; eta error {eta:.2e}"),
    )
}

fn bootstrap() -> Verdict {
    let op = TidOperator::first_order(lattice(0.0, 3));
    let seed = vec![Seed { lambda: -1.0, value: 1.0 }];
    let perturbed = |l: f64| {
        let matrix = two_mode_coupling(op.spectrum(), 0.0, -1.0).unwrap();
        let p = PerturbationSpec { kind: PerturbationKind::ModeCoupling { l, delta: 0.01, matrix }, acts_on: Slot::Identity };
        let run = BootstrapRun::new(op.clone(), 0.0, seed.clone()).unwrap().with_perturbation(p).unwrap();
        fit_decay(&make_kernel_element(&run).unwrap(), run.beta_lower().unwrap()).unwrap()
    };
    let (f1, f2) = (perturbed(1.0), perturbed(2.0));
    let rate_ok = (f1.fitted_exponent - f1.beta_lower.abs()).abs() <= RATE_REL * f1.beta_lower.abs();
    let poly_ok = f2.fitted_poly_power.abs() <= POLY_BAND;
    let mut seed_err = 0.0f64;
    for lambda in [-1.0, -2.0, -3.0] {
        let run = BootstrapRun::new(op.clone(), 0.0, vec![Seed { lambda, value: 1.0 }]).unwrap();
        let fit = fit_decay(&make_kernel_element(&run).unwrap(), run.beta_lower().unwrap()).unwrap();
        seed_err = seed_err.max((fit.fitted_exponent + lambda).abs() / lambda.abs());
    }
    (
        rate_ok && poly_ok && seed_err <= SEED_REL,
        format!(
            "delta/t rate {:.5}; delta/t^2 power {:.2e}; seeded exponents rel. error {seed_err:.2e}",
            f1.fitted_exponent, f2.fitted_poly_power
        ),
    )
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cylweight")).args(args).output().unwrap()
}

fn write_lattice_operator(dir: &Path) -> String {
    let p = dir.join("op.json");
    std::fs::write(&p, r#"{"order": 1, "spectrum": {"source": "lattice", "offset": 0, "n_max": 1}}"#).unwrap();
    p.to_string_lossy().into_owned()
}

fn non_fredholm_witness() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let op = write_lattice_operator(dir.path());
    let (t0, tmax, n) = (2.0, 40.0, 4_001usize);
    let h = (tmax - t0) / (n - 1) as f64;
    // modes -1, 0, 1; only the zero mode carries 1/t
    let mut csv = String::from("t,mode_index,value\n");
    for k in 0..3 {
        for i in 0..n {
            let t = t0 + i as f64 * h;
            csv.push_str(&format!("{t:.17e},{k},{:.17e}\n", if k == 1 { 1.0 / t } else { 0.0 }));
        }
    }
    let field = dir.path().join("f.csv");
    std::fs::write(&field, csv).unwrap();
    std::fs::write(
        dir.path().join("f.meta.json"),
        format!(r#"{{"t0": {t0}, "tmax": {tmax}, "n": {n}, "tail": {{"exp_rate": 0, "power": 1}}}}"#),
    )
    .unwrap();
    let f = field.to_string_lossy().into_owned();
    let plus = cli(&["solve", "--operator", &op, "--field", &f, "--beta", "0", "--sign", "plus"]);
    let out = dir.path().join("u.csv");
    let o = out.to_string_lossy().into_owned();
    let minus = cli(&["solve", "--operator", &op, "--field", &f, "--beta", "0", "--b", "0.4", "--out", &o]);
    if minus.status.code() != Some(0) {
        return (false, format!("minus branch exited {:?}", minus.status.code()));
    }
    // u - log t on the zero mode must be the constant fixed by the start of integration
    let mut diffs = Vec::new();
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[1] == "1" {
            let t: f64 = rec[0].parse().unwrap();
            diffs.push(rec[2].parse::<f64>().unwrap() - t.ln());
        }
    }
    let spread = diffs.iter().copied().fold(f64::MIN, f64::max) - diffs.iter().copied().fold(f64::MAX, f64::min);
    (
        plus.status.code() == Some(5) && diffs.len() == n && spread <= LOG_TOL,
        format!("plus exit {:?}; minus: u - log t spread {spread:.2e}, offset {:.6}", plus.status.code(), diffs[0]),
    )
}

fn prop_eta_harness() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("op.json");
    std::fs::write(&p, r#"{"order": 1, "spectrum": {"source": "lattice", "offset": 0, "n_max": 6}}"#).unwrap();
    let op = p.to_string_lossy().into_owned();
    let mut rows = Vec::new();
    let mut at_half = f64::NAN;
    for beta in ["0", "0.25", "0.5", "1"] {
        let o = cli(&["index", "--operator", &op, "--beta-plus", beta, "--b-plus", "0.6", "--prop-eta"]);
        if o.status.code() != Some(0) {
            return (false, format!("beta {beta}: exit {:?}", o.status.code()));
        }
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        let (a, b) = (v["discrepancy_a"].as_f64().unwrap(), v["discrepancy_b"].as_f64().unwrap());
        if beta == "0.5" {
            at_half = b;
        }
        rows.push(format!("{beta}: ({a}, {b})"));
    }
    (at_half == 0.0, format!("discrepancies (a, b) {}", rows.join(", ")))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("green solver exactness", green_exactness),
        ("right-inverse identity", right_inverse),
        ("gluing across the lower root", gluing),
        ("t0-independence of operator norms", t0_independence),
        ("Neumann engine", neumann),
        ("Hardy suite", hardy_suite),
        ("index machinery", index_machinery),
        ("decay bootstrap", bootstrap),
        ("non-Fredholm witness", non_fredholm_witness),
        ("eta bookkeeping harness", prop_eta_harness),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        let _ = writeln!(out, "[{}] {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        if !ok {
            failed.push(i + 1);
        }
    }
    let _ = out.flush();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
