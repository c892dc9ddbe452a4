//! File formats: spectrum/operator JSON, field CSV with a JSON sidecar, and fixed-precision output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use cylweight::{CylField, EigenMode, Error, LinkSpectrum, Tail, TidOperator, TimeGrid};

/// Every float is written with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// JSON text with fixed float precision; objects keep insertion order.
pub fn to_json(v: &Value) -> String {
    let mut s = String::new();
    write_value(&mut s, v, 0);
    s.push('\n');
    s
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| {
        out.push('\n');
        for _ in 0..d {
            out.push_str("  ");
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric rows stay on one line
            if a.len() <= 4 && a.iter().all(|x| x.is_number() || x.is_null()) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, depth);
                }
                out.push(']');
                return;
            }
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, x)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_value(out, x, depth + 1);
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

pub fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| schema(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| schema(format!("cannot write {}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumFile {
    source: String,
    #[serde(default)]
    modes: Option<Vec<EigenMode>>,
    #[serde(default)]
    offset: Option<f64>,
    #[serde(default)]
    n_max: Option<usize>,
    #[serde(default)]
    dim_link: Option<usize>,
    #[serde(default)]
    l_max: Option<usize>,
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
}

fn spectrum_from(f: SpectrumFile) -> Result<LinkSpectrum, Error> {
    let missing = |k: &str| schema(format!("spectrum source {:?} needs {k:?}", f.source));
    let built = match f.source.as_str() {
        "explicit" => return LinkSpectrum::explicit(f.modes.clone().ok_or_else(|| missing("modes"))?).map_err(to_schema),
        "lattice" => LinkSpectrum::lattice(f.offset.unwrap_or(0.0), f.n_max.ok_or_else(|| missing("n_max"))?),
        "sphere" => {
            LinkSpectrum::sphere_laplacian(f.dim_link.ok_or_else(|| missing("dim_link"))?, f.l_max.ok_or_else(|| missing("l_max"))?)
        }
        "matrix" => LinkSpectrum::from_matrix(f.matrix.as_ref().ok_or_else(|| missing("matrix"))?),
        other => return Err(schema(format!("unknown spectrum source {other:?}"))),
    }
    .map_err(to_schema)?;
    if let Some(modes) = &f.modes {
        let same = modes.len() == built.modes().len()
            && modes.iter().zip(built.modes()).all(|(a, b)| (a.lambda - b.lambda).abs() <= 1e-12 && a.multiplicity == b.multiplicity);
        if !same {
            return Err(schema("listed modes disagree with the spectrum preset"));
        }
    }
    Ok(built)
}

fn to_schema(e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::Schema(m),
        e => e,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorFile {
    order: u8,
    #[serde(default)]
    a1: Option<f64>,
    spectrum: SpectrumFile,
}

pub fn parse_operator(text: &str) -> Result<TidOperator, Error> {
    let f: OperatorFile = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    let a1 = match (f.order, f.a1) {
        (1, None) => -1.0,
        (_, Some(a)) => a,
        (_, None) => return Err(schema("second-order operators need a1")),
    };
    TidOperator::new(f.order, a1, spectrum_from(f.spectrum)?)
}

pub fn read_operator(path: &Path) -> Result<TidOperator, Error> {
    parse_operator(&read_text(path)?).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// `"compact"`, `"undeclared"`, or `{"exp_rate": rho, "power": q}` with `power` optional.
pub fn tail_from_json(v: &Value) -> Result<Tail, Error> {
    match v {
        Value::String(s) if s == "compact" => Ok(Tail::Compact),
        Value::String(s) if s == "undeclared" => Ok(Tail::Undeclared),
        Value::Object(m) => {
            if m.keys().any(|k| k != "exp_rate" && k != "power") {
                return Err(schema("tail accepts only exp_rate and power"));
            }
            let num = |k: &str| -> Result<f64, Error> {
                match m.get(k) {
                    None => Ok(0.0),
                    Some(x) => x.as_f64().ok_or_else(|| schema(format!("tail {k} must be a number"))),
                }
            };
            if !m.contains_key("exp_rate") {
                return Err(schema("tail object needs exp_rate"));
            }
            Ok(Tail::Asymptotic { exp_rate: num("exp_rate")?, power: num("power")? })
        }
        _ => Err(schema("tail must be \"compact\" or {\"exp_rate\": ...}")),
    }
}

pub fn tail_to_json(t: &Tail) -> Value {
    match *t {
        Tail::Compact => Value::from("compact"),
        Tail::Undeclared => Value::from("undeclared"),
        Tail::Asymptotic { exp_rate, power } => {
            let mut m = serde_json::Map::new();
            m.insert("exp_rate".into(), Value::from(exp_rate));
            if power != 0.0 {
                m.insert("power".into(), Value::from(power));
            }
            Value::Object(m)
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    t0: f64,
    tmax: f64,
    n: usize,
    tail: Value,
}

/// Sidecar path next to a field CSV: `f.csv` becomes `f.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

pub fn read_field(csv_path: &Path, meta_path: Option<&Path>, spectrum: &LinkSpectrum) -> Result<CylField, Error> {
    let meta_path = meta_path.map(Path::to_path_buf).unwrap_or_else(|| sidecar_path(csv_path));
    let meta: MetaFile = read_json(&meta_path)?;
    let grid = TimeGrid::new(meta.t0, meta.tmax, meta.n).map_err(to_schema)?;
    let tail = tail_from_json(&meta.tail)?;
    let dim = spectrum.total_dim();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(csv_path)
        .map_err(|e| schema(format!("{}: {e}", csv_path.display())))?;
    let headers = rdr.headers().map_err(|e| schema(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "mode_index", "value"] {
        return Err(schema("field CSV header must be t,mode_index,value"));
    }
    let mut coeffs = vec![Vec::with_capacity(grid.n); dim];
    let mut last: Option<usize> = None;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| schema(format!("row {}: {e}", row + 2)))?;
        let bad = |what: &str| schema(format!("row {}: bad {what}", row + 2));
        let t: f64 = rec[0].parse().map_err(|_| bad("t"))?;
        let k: usize = rec[1].parse().map_err(|_| bad("mode_index"))?;
        let v: f64 = rec[2].parse().map_err(|_| bad("value"))?;
        if k >= dim {
            return Err(schema(format!("mode_index {k} out of range for {dim} modes")));
        }
        let i = coeffs[k].len();
        if let Some(pk) = last {
            if k < pk || (k > pk && coeffs[pk].len() != grid.n) {
                return Err(schema("rows must be sorted by (mode_index, t)"));
            }
        }
        if i >= grid.n || (t - grid.t(i)).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(schema(format!("row {}: t = {t} is off the sidecar grid", row + 2)));
        }
        if !v.is_finite() {
            return Err(bad("value"));
        }
        coeffs[k].push(v);
        last = Some(k);
    }
    if coeffs.iter().any(|c| c.len() != grid.n) {
        return Err(schema(format!("every mode needs {} samples", grid.n)));
    }
    CylField::new(grid, spectrum.clone(), coeffs, tail).map_err(to_schema)
}

pub fn field_csv(f: &CylField) -> String {
    let mut s = String::from("t,mode_index,value\n");
    for (k, c) in f.coeffs.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            let _ = writeln!(s, "{},{k},{}", fmt_f64(f.grid.t(i)), fmt_f64(*v));
        }
    }
    s
}

pub fn field_meta(f: &CylField) -> Value {
    serde_json::json!({
        "t0": f.grid.t0,
        "tmax": f.grid.t_max(),
        "n": f.grid.n,
        "tail": tail_to_json(&f.tail),
    })
}

pub fn write_field(path: &Path, f: &CylField) -> Result<(), Error> {
    write_text(path, &field_csv(f))?;
    write_text(&sidecar_path(path), &to_json(&field_meta(f)))
}
