mod io;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cylweight::bootstrap::{self, BootstrapRun, Seed};
use cylweight::field::{graph_norms, weighted_lp_norm};
use cylweight::hardy::{self, HardyCase, HardyGrid, HardyVariant};
use cylweight::index::{self, EndWeights};
use cylweight::{BSide, Error, InverseHandle, PerturbationKind, PerturbationSpec, Slot, TidOperator, WeightClass, WeightSpec};

const SUBCOMMANDS: [&str; 6] = ["indicial", "solve", "index", "hardy", "bootstrap", "norms"];

#[derive(Parser)]
#[command(name = "cylweight", version, about = "Weighted analysis of model operators on cylinders")]
struct Cli {
    /// Worker threads for mode- and member-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Indicial roots of an operator, or the class of one weight.
    Indicial(IndicialArgs),
    /// Apply the right inverse to a field and report the residual.
    Solve(SolveArgs),
    /// Kernel, cokernel and index ledger for end weights.
    Index(IndexArgs),
    /// Hardy ratios over a seeded test family (CSV).
    Hardy(HardyArgs),
    /// Kernel element of a perturbed operator and its decay fit.
    Bootstrap(BootstrapArgs),
    /// Weighted graph norms of a field.
    Norms(NormsArgs),
}

#[derive(Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct IndicialArgs {
    #[arg(long)]
    operator: PathBuf,
    #[arg(long, default_value_t = -10.0)]
    lo: f64,
    #[arg(long, default_value_t = 10.0)]
    hi: f64,
    /// Classify this weight instead of listing roots; super-indicial weights exit 3.
    #[arg(long)]
    classify: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct SolveArgs {
    #[arg(long)]
    operator: PathBuf,
    #[arg(long)]
    field: PathBuf,
    /// Sidecar JSON; defaults to the field path with extension `.meta.json`.
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    beta: f64,
    #[arg(long, value_enum)]
    sign: Option<SignArg>,
    /// Polynomial exponent; picks the sign (b > 1/2 plus, b < 1/2 minus).
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    perturbation: Option<PathBuf>,
    #[arg(long)]
    series_tol: Option<f64>,
    #[arg(long)]
    max_terms: Option<usize>,
    /// Where to write the solution CSV (sidecar alongside).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct IndexArgs {
    #[arg(long)]
    operator: PathBuf,
    #[arg(long)]
    beta_plus: f64,
    #[arg(long)]
    beta_minus: Option<f64>,
    #[arg(long)]
    b_plus: f64,
    #[arg(long)]
    b_minus: Option<f64>,
    /// Print one admissibility row per mode to stderr.
    #[arg(long)]
    explain: bool,
    /// Report the eta bookkeeping check at `beta_plus` instead.
    #[arg(long)]
    prop_eta: bool,
    /// Report the index change from `beta_plus` to this weight at `b_plus`.
    #[arg(long)]
    change_to: Option<f64>,
    /// Calibrate at the given weights and predict these targets: `bp,bm,b+,b-;...`.
    #[arg(long, allow_hyphen_values = true)]
    calibrate: Option<String>,
}

#[derive(Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct HardyArgs {
    #[arg(long, value_parser = parse_variant)]
    variant: HardyVariant,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 0)]
    theta: u32,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = hardy::DEFAULT_STEPS_TO_ONE)]
    steps_to_one: usize,
    #[arg(long, default_value_t = hardy::DEFAULT_T_END)]
    t_end: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct BootstrapArgs {
    #[arg(long)]
    operator: PathBuf,
    #[arg(long)]
    beta: f64,
    /// Seeded eigenvalues, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    seed_lambda: String,
    /// Seed values, comma separated; all 1 when omitted.
    #[arg(long, allow_hyphen_values = true)]
    seed_value: Option<String>,
    #[arg(long)]
    perturbation: Option<PathBuf>,
    /// Couple two eigen-directions `a,b` with profile `delta t^{-l}`.
    #[arg(long, allow_hyphen_values = true)]
    couple: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[arg(long, default_value_t = bootstrap::BOOT_T0)]
    t0: f64,
    #[arg(long, default_value_t = bootstrap::BOOT_T_END)]
    t_end: f64,
    #[arg(long, default_value_t = bootstrap::BOOT_N)]
    n: usize,
    /// Per-strip CSV `m,norm` of the kernel element.
    #[arg(long)]
    strips: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct NormsArgs {
    #[arg(long)]
    operator: PathBuf,
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long)]
    b: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

fn parse_variant(s: &str) -> Result<HardyVariant, String> {
    serde_json::from_value(Value::from(s)).map_err(|_| format!("unknown variant {s:?}"))
}

/// Documented exit code of each error kind.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema(_) | Error::InvalidInput(_) | Error::UndeclaredTail => 2,
        Error::SuperIndicial { .. } | Error::BorderlineB => 3,
        Error::NonConvergent(_) | Error::EigenNonConvergent(_) | Error::Overflow(_) => 4,
        Error::Divergent(_) | Error::NotInSpace(_) | Error::ViolationWitness(_) => 5,
        Error::TruncationExhausted(_) | Error::Ambiguous(_) | Error::EtaUnavailable(_) => 6,
    }
}

type Out = Result<String, Error>;

fn report<T: serde::Serialize>(v: &T) -> Out {
    serde_json::to_value(v).map(|v| io::to_json(&v)).map_err(|e| Error::Schema(e.to_string()))
}

fn cmd_indicial(a: &IndicialArgs) -> Result<(String, u8), Error> {
    let op = io::read_operator(&a.operator)?;
    if let Some(beta) = a.classify {
        let (class, lambda, code) = match op.classify_weight(beta) {
            WeightClass::NonIndicial => ("non_indicial", None, 0),
            WeightClass::Indicial { lambda } => ("indicial", Some(lambda), 0),
            WeightClass::SuperIndicial { lambda } => ("super_indicial", Some(lambda), 3),
        };
        return Ok((io::to_json(&json!({"beta": beta, "class": class, "lambda": lambda})), code));
    }
    if !(a.lo <= a.hi) {
        return Err(Error::Schema("need lo <= hi".into()));
    }
    let roots: Vec<Value> =
        op.indicial_roots(a.lo, a.hi).iter().map(|r| json!({"beta": r.beta, "kind": r.kind})).collect();
    Ok((io::to_json(&Value::Array(roots)), 0))
}

fn load_perturbation(path: &Path) -> Result<PerturbationSpec, Error> {
    io::read_json(path)
}

fn cmd_solve(a: &SolveArgs) -> Out {
    let op = io::read_operator(&a.operator)?;
    let f = io::read_field(&a.field, a.meta.as_deref(), op.spectrum())?;
    let sign = match (a.b, a.sign) {
        (Some(b), _) => BSide::from_b(b)?,
        (None, Some(SignArg::Plus)) => BSide::Plus,
        (None, Some(SignArg::Minus)) => BSide::Minus,
        (None, None) => return Err(Error::Schema("solve needs --sign or --b".into())),
    };
    let mut h = InverseHandle::new(op, a.beta, sign, f.grid.t0)?;
    if let Some(p) = &a.perturbation {
        h = h.with_perturbation(load_perturbation(p)?)?;
    }
    if a.series_tol.is_some() || a.max_terms.is_some() {
        h = h.with_series(
            a.series_tol.unwrap_or(cylweight::inverse::DEFAULT_SERIES_TOL),
            a.max_terms.unwrap_or(cylweight::inverse::DEFAULT_MAX_TERMS),
        )?;
    }
    let (u, rep) = h.apply_q_perturbed(&f)?;
    if let Some(out) = &a.out {
        io::write_field(out, &u)?;
    }
    Ok(io::to_json(&json!({
        "residual_sup": rep.residual_sup,
        "terms_used": rep.terms_used,
        "ratio": rep.ratio,
    })))
}

fn parse_weights(s: &str) -> Result<Vec<EndWeights>, Error> {
    s.split(';')
        .filter(|x| !x.trim().is_empty())
        .map(|w| {
            let v: Vec<f64> = parse_list(w)?;
            if v.len() != 4 {
                return Err(Error::Schema(format!("weights {w:?} need four numbers")));
            }
            EndWeights::new(v[0], v[1], v[2], v[3])
        })
        .collect()
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Schema(format!("not a number: {x:?}"))))
        .collect()
}

fn cmd_index(a: &IndexArgs) -> Out {
    let op = io::read_operator(&a.operator)?;
    if a.prop_eta {
        return report(&index::check_prop_eta(&op, a.beta_plus)?);
    }
    if let Some(to) = a.change_to {
        let change = index::index_change(&op, a.beta_plus, to, a.b_plus)?;
        return Ok(io::to_json(&json!({"from": a.beta_plus, "to": to, "b": a.b_plus, "change": change})));
    }
    let w = EndWeights::new(a.beta_plus, a.beta_minus.unwrap_or(a.beta_plus), a.b_plus, a.b_minus.unwrap_or(a.b_plus))?;
    if let Some(targets) = &a.calibrate {
        return report(&index::calibrate_and_predict(&op, &w, &parse_weights(targets)?)?);
    }
    let rep = index::mode_count_index(&op, &w)?;
    if a.explain {
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err, "lambda mult ker+ ker- in_ker coker+ coker- in_coker blocked_by");
        for r in &rep.ledger {
            let _ = writeln!(
                err,
                "{} {} {} {} {} {} {} {} {}",
                r.lambda,
                r.mult,
                r.kernel_plus,
                r.kernel_minus,
                r.in_kernel,
                r.cokernel_plus,
                r.cokernel_minus,
                r.in_cokernel,
                if r.kernel_blocked_by.is_empty() { "-" } else { &r.kernel_blocked_by }
            );
        }
        let _ = writeln!(err, "kernel {} cokernel {} index {}", rep.ker_dim, rep.coker_dim, rep.index);
    }
    report(&rep)
}

fn cmd_hardy(a: &HardyArgs) -> Out {
    let case = HardyCase::new(a.variant, a.p, a.b, a.mu, a.theta)?;
    let grid = HardyGrid { steps_to_one: a.steps_to_one, t_end: a.t_end };
    let est = hardy::estimate_constant(&case, a.n, a.seed, &grid)?;
    let mut s = String::from("variant,p,b,mu,theta,member_id,ratio\n");
    for m in &est.members {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            a.variant.name(),
            io::fmt_f64(a.p),
            io::fmt_f64(a.b),
            io::fmt_f64(a.mu),
            a.theta,
            m.member_id,
            io::fmt_f64(m.ratio)
        ));
    }
    match &a.out {
        Some(p) => {
            io::write_text(p, &s)?;
            report(&json!({"sup_ratio": est.sup_ratio, "argmax_id": est.argmax_id, "members": est.members.len()}))
        }
        None => Ok(s),
    }
}

fn cmd_bootstrap(a: &BootstrapArgs) -> Out {
    let op = io::read_operator(&a.operator)?;
    let lambdas = parse_list(&a.seed_lambda)?;
    let values = match &a.seed_value {
        Some(v) => parse_list(v)?,
        None => vec![1.0; lambdas.len()],
    };
    if values.len() != lambdas.len() {
        return Err(Error::Schema("seed_value needs one entry per seed_lambda".into()));
    }
    let seeds = lambdas.iter().zip(&values).map(|(&lambda, &value)| Seed { lambda, value }).collect();
    let mut run = BootstrapRun::new(op, a.beta, seeds)?;
    run.t0 = a.t0;
    run.t_end = a.t_end;
    run.n = a.n;
    run.iterations = a.iterations;
    run.validate()?;
    let pert = match (&a.perturbation, &a.couple) {
        (Some(_), Some(_)) => return Err(Error::Schema("give either --perturbation or --couple".into())),
        (Some(p), None) => Some(load_perturbation(p)?),
        (None, Some(c)) => {
            let ab = parse_list(c)?;
            if ab.len() != 2 {
                return Err(Error::Schema("--couple takes two eigenvalues".into()));
            }
            let matrix = bootstrap::two_mode_coupling(run.op.spectrum(), ab[0], ab[1])?;
            Some(PerturbationSpec {
                kind: PerturbationKind::ModeCoupling { l: a.l, delta: a.delta, matrix },
                acts_on: Slot::Identity,
            })
        }
        (None, None) => None,
    };
    if let Some(p) = pert {
        run = run.with_perturbation(p)?;
    }
    let h = bootstrap::make_kernel_element(&run)?;
    let residual = bootstrap::kernel_residual(&run, &h)?;
    let beta_lower = run.beta_lower()?;
    let fit = bootstrap::fit_decay(&h, beta_lower)?;
    run.h0 = Some(h);
    let iterates = bootstrap::iterate_s_experiment(&run)?;
    if let Some(path) = &a.strips {
        let mut s = String::from("m,norm\n");
        for (m, v) in &fit.strip_norms {
            s.push_str(&format!("{},{}\n", io::fmt_f64(*m), io::fmt_f64(*v)));
        }
        io::write_text(path, &s)?;
    }
    let summary = |f: &bootstrap::DecayFit| {
        json!({
            "fitted_exponent": f.fitted_exponent,
            "fitted_poly_power": f.fitted_poly_power,
            "r_squared": f.r_squared,
            "strips": f.strip_norms.len(),
        })
    };
    let its: Vec<Value> = iterates
        .iter()
        .map(|s| {
            json!({
                "t_start": s.t_start,
                "stage": s.stage,
                "fit": summary(&s.fit),
                "residual_sup": s.residual_sup,
                "max_change": s.max_change,
            })
        })
        .collect();
    Ok(io::to_json(&json!({
        "beta": run.beta,
        "beta_lower": beta_lower,
        "kernel_residual": residual,
        "fit": summary(&fit),
        "iterates": its,
    })))
}

fn cmd_norms(a: &NormsArgs) -> Out {
    let op: TidOperator = io::read_operator(&a.operator)?;
    let f = io::read_field(&a.field, a.meta.as_deref(), op.spectrum())?;
    let w = WeightSpec { beta: a.beta, gamma: a.gamma, b: a.b, p: a.p, k: a.k, alpha: a.alpha }.validated()?;
    let g = graph_norms(&f, &op, &w)?;
    let lp = weighted_lp_norm(&f, a.beta, a.b, a.p)?;
    let mut v = serde_json::to_value(g).map_err(|e| Error::Schema(e.to_string()))?;
    v["weighted_lp"] = Value::from(lp);
    Ok(io::to_json(&v))
}

/// Inserts flags from a `--config` JSON object right after the subcommand name.
fn merged_args(raw: Vec<String>) -> Result<Vec<String>, Error> {
    let mut path = None;
    for (i, a) in raw.iter().enumerate() {
        if a == "--config" {
            path = raw.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(raw);
    };
    let cfg: serde_json::Map<String, Value> = io::read_json(Path::new(&path))?;
    let mut args = raw;
    let pos = match args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) {
        Some(p) => p,
        None => {
            let sub = cfg
                .get("subcommand")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Schema("no subcommand given on the command line or in the config".into()))?;
            args.insert(1, sub.to_string());
            1
        }
    };
    let mut extra = Vec::new();
    for (k, v) in &cfg {
        if k == "subcommand" || k == "config" || k == "threads" {
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Bool(true) => extra.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => extra.extend([flag, s.clone()]),
            Value::Number(n) => extra.extend([flag, n.to_string()]),
            _ => return Err(Error::Schema(format!("config value for {k:?} must be a scalar"))),
        }
    }
    if let (Some(t), false) = (cfg.get("threads"), args.iter().any(|a| a == "--threads" || a.starts_with("--threads="))) {
        extra.extend(["--threads".to_string(), t.to_string()]);
    }
    args.splice(pos + 1..pos + 1, extra);
    Ok(args)
}

fn run() -> Result<(String, u8), (String, u8)> {
    let fail = |e: Error| (format!("error: {e}"), exit_code(&e));
    let args = merged_args(std::env::args().collect()).map_err(fail)?;
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let code = if e.use_stderr() { 2 } else { 0 };
        (e.render().to_string(), code)
    })?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(fail(Error::Schema("--threads must be positive".into())));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (format!("error: {e}"), 1))?;
    }
    let out = match &cli.cmd {
        Cmd::Indicial(a) => cmd_indicial(a),
        Cmd::Solve(a) => cmd_solve(a).map(|s| (s, 0)),
        Cmd::Index(a) => cmd_index(a).map(|s| (s, 0)),
        Cmd::Hardy(a) => cmd_hardy(a).map(|s| (s, 0)),
        Cmd::Bootstrap(a) => cmd_bootstrap(a).map(|s| (s, 0)),
        Cmd::Norms(a) => cmd_norms(a).map(|s| (s, 0)),
    };
    out.map_err(fail)
}

fn main() -> ExitCode {
    let result = std::panic::catch_unwind(run);
    let (text, code, to_err) = match result {
        Ok(Ok((s, c))) => (s, c, false),
        Ok(Err((s, 0))) => (s, 0, false),
        Ok(Err((s, c))) => (s, c, true),
        Err(_) => ("error: internal failure".to_string(), 1, true),
    };
    if to_err {
        eprintln!("{}", text.trim_end());
    } else {
        print!("{text}");
        let _ = std::io::stdout().flush();
    }
    ExitCode::from(code)
}
