//! CSV and JSON schemas for experiment records.
//!
//! CSV files start with optional `# key=value` metadata lines followed by a
//! mandatory header row. Numeric columns carry their unit as a name suffix
//! (`tau_us`); dimensionless columns (`p1`, `i`, `q`) are named exactly.
//! Writers emit the canonical SI form, so parsing and re-serialising a
//! canonical file reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::units::{self, split_unit_suffix, Dimension, Unit};
use super::{
    check_cooldown_series, CooldownRecord, DecayCurve, DomainError, IqShot, IqShotSet,
    ParameterKind, RamseyCurve, Result, TimeTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaKind {
    Decay,
    Ramsey,
    Iq,
    Trace,
    Cooldown,
}

impl FromStr for SchemaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "decay" => Ok(SchemaKind::Decay),
            "ramsey" => Ok(SchemaKind::Ramsey),
            "iq" => Ok(SchemaKind::Iq),
            "trace" => Ok(SchemaKind::Trace),
            "cooldown" => Ok(SchemaKind::Cooldown),
            other => Err(format!(
                "unknown schema kind `{other}`, expected one of decay, ramsey, iq, trace, cooldown"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Decay(DecayCurve),
    Ramsey(RamseyCurve),
    Iq(IqShotSet),
    Trace(TimeTrace),
    Cooldown(Vec<CooldownRecord>),
}

/// Reads `path`, parses it as `kind` and enforces every type invariant.
pub fn validate_dataset(path: &Path, kind: SchemaKind) -> Result<Dataset> {
    Ok(match kind {
        SchemaKind::Decay => Dataset::Decay(read_decay(path)?),
        SchemaKind::Ramsey => Dataset::Ramsey(read_ramsey(path)?),
        SchemaKind::Iq => Dataset::Iq(read_iq(path)?),
        SchemaKind::Trace => Dataset::Trace(read_trace(path)?),
        SchemaKind::Cooldown => Dataset::Cooldown(read_cooldowns(path)?),
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| DomainError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_decay(path: &Path) -> Result<DecayCurve> {
    parse_decay(&read_text(path)?)
}

pub fn read_ramsey(path: &Path) -> Result<RamseyCurve> {
    let sidecar = read_text(&ramsey_sidecar_path(path))?;
    parse_ramsey(&read_text(path)?, &sidecar)
}

pub fn read_iq(path: &Path) -> Result<IqShotSet> {
    parse_iq(&read_text(path)?)
}

pub fn read_trace(path: &Path) -> Result<TimeTrace> {
    parse_trace(&read_text(path)?)
}

pub fn read_cooldowns(path: &Path) -> Result<Vec<CooldownRecord>> {
    parse_cooldowns(&read_text(path)?)
}

/// The JSON sidecar of a Ramsey CSV sits next to it with a `.json` extension.
pub fn ramsey_sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

struct Table {
    meta: BTreeMap<String, String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse_table(text: &str) -> Result<Table> {
    let mut meta = BTreeMap::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let (key, value) = rest.split_once('=').ok_or_else(|| {
                DomainError::schema("metadata", format!("expected `# key=value`, got `{line}`"))
            })?;
            meta.insert(key.trim().to_string(), value.trim().to_string());
        } else if !trimmed.is_empty() {
            break;
        }
        lines.next();
    }
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(body.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DomainError::schema("header", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(DomainError::schema("header", "missing header row"));
    }
    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DomainError::schema("row", format!("row {row}: {e}")))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(Table { meta, header, rows })
}

#[derive(Clone, Copy)]
enum ColumnSpec {
    /// Column `<base>_<unit>` with the given dimension, converted to SI.
    WithUnit(&'static str, Dimension),
    /// Column named exactly as given.
    Plain(&'static str),
}

impl ColumnSpec {
    fn base(self) -> &'static str {
        match self {
            ColumnSpec::WithUnit(b, _) | ColumnSpec::Plain(b) => b,
        }
    }
}

/// Resolves the schema columns against the header. Returns, per spec, the
/// column index and unit.
fn resolve_columns(header: &[String], specs: &[ColumnSpec]) -> Result<Vec<(usize, Unit)>> {
    let mut used = vec![false; header.len()];
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let found = match *spec {
            ColumnSpec::Plain(name) => header
                .iter()
                .position(|h| h == name)
                .map(|idx| (idx, Unit::Dimensionless)),
            ColumnSpec::WithUnit(base, dim) => {
                if header.iter().any(|h| h == base) {
                    return Err(DomainError::MissingUnit(base.to_string()));
                }
                match units::find_with_unit(header.iter().map(String::as_str), base, dim) {
                    Some((idx, unit)) => Some((idx, unit)),
                    None => {
                        if let Some(h) = header
                            .iter()
                            .find(|h| split_unit_suffix(h).is_some_and(|(b, _)| b == base))
                        {
                            return Err(DomainError::schema(
                                h.clone(),
                                format!("unit has the wrong dimension, expected {dim:?}"),
                            ));
                        }
                        None
                    }
                }
            }
        };
        let (idx, factor) = found.ok_or_else(|| {
            DomainError::schema(spec.base(), "required column missing from header")
        })?;
        used[idx] = true;
        out.push((idx, factor));
    }
    if let Some(idx) = used.iter().position(|u| !u) {
        return Err(DomainError::schema(
            header[idx].clone(),
            "column not part of this schema",
        ));
    }
    Ok(out)
}

fn numeric_columns(table: &Table, specs: &[ColumnSpec]) -> Result<Vec<Vec<f64>>> {
    let columns = resolve_columns(&table.header, specs)?;
    let mut out = vec![Vec::with_capacity(table.rows.len()); specs.len()];
    for (row, record) in table.rows.iter().enumerate() {
        if record.len() != table.header.len() {
            return Err(DomainError::schema(
                "row",
                format!("row {row}: expected {} fields", table.header.len()),
            ));
        }
        for (col, &(idx, factor)) in columns.iter().enumerate() {
            let cell = &record[idx];
            let value: f64 = cell.parse().map_err(|_| {
                DomainError::schema(
                    table.header[idx].clone(),
                    format!("row {row}: `{cell}` is not a number"),
                )
            })?;
            out[col].push(factor.value_to_si(value));
        }
    }
    Ok(out)
}

fn meta_u32(table: &Table, key: &str) -> Result<Option<u32>> {
    table
        .meta
        .get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| DomainError::schema(key, format!("`{v}` is not a count")))
        })
        .transpose()
}

fn check_meta_keys(table: &Table, allowed: &[&str]) -> Result<()> {
    match table.meta.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(DomainError::schema(k.clone(), "unknown metadata key")),
        None => Ok(()),
    }
}

pub fn parse_decay(text: &str) -> Result<DecayCurve> {
    let table = parse_table(text)?;
    check_meta_keys(&table, &["shots_per_point"])?;
    let shots = meta_u32(&table, "shots_per_point")?;
    let mut cols = numeric_columns(
        &table,
        &[
            ColumnSpec::WithUnit("tau", Dimension::Time),
            ColumnSpec::Plain("p1"),
        ],
    )?;
    let p1 = cols.pop().unwrap();
    let tau = cols.pop().unwrap();
    DecayCurve::new(tau, p1, shots)
}

pub fn write_decay(curve: &DecayCurve) -> String {
    let mut out = String::new();
    if let Some(n) = curve.shots_per_point {
        writeln!(out, "# shots_per_point={n}").unwrap();
    }
    out.push_str("tau_s,p1\n");
    for (tau, p) in curve.delays().iter().zip(curve.p1()) {
        writeln!(out, "{tau},{p}").unwrap();
    }
    out
}

/// Acquisition settings stored next to a Ramsey CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RamseySidecar {
    pub detuning_hz: f64,
    pub t_max_s: f64,
    pub shots: Option<u32>,
}

fn take_unit_field(
    map: &mut Map<String, Value>,
    base: &str,
    dim: Dimension,
) -> Result<Option<f64>> {
    if map.contains_key(base) {
        return Err(DomainError::MissingUnit(base.to_string()));
    }
    let key = map
        .keys()
        .find(|k| split_unit_suffix(k).is_some_and(|(b, u)| b == base && u.dimension() == dim))
        .cloned();
    let Some(key) = key else {
        return Ok(None);
    };
    let unit: Unit = split_unit_suffix(&key).unwrap().1;
    match map.remove(&key).unwrap() {
        Value::Null => Ok(None),
        Value::Number(n) => Ok(Some(unit.value_to_si(n.as_f64().unwrap()))),
        other => Err(DomainError::schema(key, format!("expected a number, got {other}"))),
    }
}

fn require(value: Option<f64>, field: &str) -> Result<f64> {
    value.ok_or_else(|| DomainError::schema(field, "required field missing"))
}

fn reject_leftovers(map: &Map<String, Value>) -> Result<()> {
    match map.keys().next() {
        Some(k) => Err(DomainError::schema(k.clone(), "field not part of this schema")),
        None => Ok(()),
    }
}

fn json_object(value: Value, what: &str) -> Result<Map<String, Value>> {
    match value {
        Value::Object(map) => Ok(map),
        other => Err(DomainError::schema(what, format!("expected an object, got {other}"))),
    }
}

fn parse_sidecar(json: &str) -> Result<RamseySidecar> {
    let value: Value =
        serde_json::from_str(json).map_err(|e| DomainError::schema("sidecar", e.to_string()))?;
    let mut map = json_object(value, "sidecar")?;
    let detuning = require(
        take_unit_field(&mut map, "detuning", Dimension::Frequency)?,
        "detuning_hz",
    )?;
    let t_max = require(take_unit_field(&mut map, "t_max", Dimension::Time)?, "t_max_s")?;
    let shots = match map.remove("shots") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => Some(
            n.as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| DomainError::schema("shots", "expected a positive count"))?,
        ),
        Some(other) => {
            return Err(DomainError::schema("shots", format!("expected a count, got {other}")))
        }
    };
    reject_leftovers(&map)?;
    Ok(RamseySidecar {
        detuning_hz: detuning,
        t_max_s: t_max,
        shots,
    })
}

pub fn parse_ramsey(csv_text: &str, sidecar_json: &str) -> Result<RamseyCurve> {
    let sidecar = parse_sidecar(sidecar_json)?;
    let table = parse_table(csv_text)?;
    check_meta_keys(&table, &[])?;
    let mut cols = numeric_columns(
        &table,
        &[
            ColumnSpec::WithUnit("tau", Dimension::Time),
            ColumnSpec::Plain("p1"),
        ],
    )?;
    let p1 = cols.pop().unwrap();
    let tau = cols.pop().unwrap();
    RamseyCurve::new(tau, p1, sidecar.detuning_hz, sidecar.t_max_s, sidecar.shots)
}

#[derive(Serialize)]
struct SidecarOut {
    detuning_hz: f64,
    t_max_s: f64,
    shots: Option<u32>,
}

/// Returns the CSV body and the JSON sidecar.
pub fn write_ramsey(curve: &RamseyCurve) -> (String, String) {
    let mut csv = String::from("tau_s,p1\n");
    for (tau, p) in curve.delays().iter().zip(curve.p1()) {
        writeln!(csv, "{tau},{p}").unwrap();
    }
    let sidecar = SidecarOut {
        detuning_hz: curve.set_detuning,
        t_max_s: curve.t_max,
        shots: curve.shots_per_point,
    };
    let mut json = serde_json::to_string_pretty(&sidecar).unwrap();
    json.push('\n');
    (csv, json)
}

pub fn parse_iq(text: &str) -> Result<IqShotSet> {
    let table = parse_table(text)?;
    check_meta_keys(&table, &["n_per_state"])?;
    let declared = meta_u32(&table, "n_per_state")?;
    let cols = numeric_columns(
        &table,
        &[
            ColumnSpec::Plain("i"),
            ColumnSpec::Plain("q"),
            ColumnSpec::Plain("prepared_state"),
        ],
    )?;
    let mut shots = Vec::with_capacity(table.rows.len());
    for row in 0..table.rows.len() {
        let state = cols[2][row];
        if state != 0.0 && state != 1.0 {
            return Err(DomainError::invariant("prepared_state is 0 or 1", Some(row)));
        }
        shots.push(IqShot {
            i: cols[0][row],
            q: cols[1][row],
            prepared_state: state as u8,
        });
    }
    let set = IqShotSet::new(shots)?;
    if let Some(n) = declared {
        if set.count(0) != n as usize || set.count(1) != n as usize {
            return Err(DomainError::invariant(
                format!(
                    "declared n_per_state={n} but found {} / {} shots",
                    set.count(0),
                    set.count(1)
                ),
                None,
            ));
        }
    }
    Ok(set)
}

pub fn write_iq(set: &IqShotSet) -> String {
    let mut out = String::new();
    if let Some(n) = set.n_per_state() {
        writeln!(out, "# n_per_state={n}").unwrap();
    }
    out.push_str("i,q,prepared_state\n");
    for s in set.shots() {
        writeln!(out, "{},{},{}", s.i, s.q, s.prepared_state).unwrap();
    }
    out
}

pub fn parse_trace(text: &str) -> Result<TimeTrace> {
    let table = parse_table(text)?;
    check_meta_keys(&table, &["parameter", "unit"])?;
    let kind: ParameterKind = table
        .meta
        .get("parameter")
        .ok_or_else(|| DomainError::schema("parameter", "missing `# parameter=` metadata"))?
        .parse()
        .map_err(|e: String| DomainError::schema("parameter", e))?;
    let unit: Unit = table
        .meta
        .get("unit")
        .ok_or_else(|| DomainError::MissingUnit("value".into()))?
        .parse()
        .map_err(|e: String| DomainError::schema("unit", e))?;
    if unit.dimension() != kind.dimension() {
        return Err(DomainError::schema(
            "unit",
            format!("unit `{unit}` does not match parameter `{kind}`"),
        ));
    }
    let mut cols = numeric_columns(
        &table,
        &[
            ColumnSpec::WithUnit("t", Dimension::Time),
            ColumnSpec::Plain("value"),
        ],
    )?;
    let values: Vec<f64> = cols.pop().unwrap().into_iter().map(|v| unit.value_to_si(v)).collect();
    let t = cols.pop().unwrap();
    TimeTrace::new(kind, t, values)
}

pub fn write_trace(trace: &TimeTrace) -> String {
    let mut out = String::new();
    writeln!(out, "# parameter={}", trace.kind).unwrap();
    writeln!(out, "# unit={}", trace.kind.canonical_unit()).unwrap();
    out.push_str("t_s,value\n");
    for (t, v) in trace.timestamps().iter().zip(trace.values()) {
        writeln!(out, "{t},{v}").unwrap();
    }
    out
}

pub fn parse_cooldowns(json: &str) -> Result<Vec<CooldownRecord>> {
    let value: Value =
        serde_json::from_str(json).map_err(|e| DomainError::schema("cooldowns", e.to_string()))?;
    let Value::Array(items) = value else {
        return Err(DomainError::schema("cooldowns", "expected a JSON array"));
    };
    let mut records = Vec::with_capacity(items.len());
    for (row, item) in items.into_iter().enumerate() {
        let mut map = json_object(item, "cooldown record")?;
        let index = match map.remove("index") {
            Some(Value::Number(n)) => n
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| DomainError::schema("index", format!("row {row}: not an ordinal")))?,
            _ => return Err(DomainError::schema("index", format!("row {row}: missing"))),
        };
        let elapsed = match map.remove("elapsed_days") {
            Some(Value::Number(n)) => n.as_f64().unwrap(),
            None if map.contains_key("elapsed") => {
                return Err(DomainError::MissingUnit("elapsed".into()))
            }
            _ => {
                return Err(DomainError::schema(
                    "elapsed_days",
                    format!("row {row}: missing or not a number"),
                ))
            }
        };
        let f_q = take_unit_field(&mut map, "f_q", Dimension::Frequency)?;
        let f_r = take_unit_field(&mut map, "f_r", Dimension::Frequency)?;
        let mean_t1 = take_unit_field(&mut map, "mean_t1", Dimension::Time)?;
        reject_leftovers(&map)?;
        for (name, v) in [("f_q", f_q), ("f_r", f_r), ("mean_t1", mean_t1)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(DomainError::invariant(format!("{name} > 0"), Some(row)));
                }
            }
        }
        records.push(CooldownRecord {
            index,
            elapsed_days: elapsed,
            f_q,
            f_r,
            mean_t1,
        });
    }
    check_cooldown_series(&records)?;
    Ok(records)
}

#[derive(Serialize, Deserialize)]
struct CooldownOut {
    index: u32,
    elapsed_days: f64,
    f_q_hz: Option<f64>,
    f_r_hz: Option<f64>,
    mean_t1_s: Option<f64>,
}

pub fn write_cooldowns(records: &[CooldownRecord]) -> String {
    let out: Vec<CooldownOut> = records
        .iter()
        .map(|r| CooldownOut {
            index: r.index,
            elapsed_days: r.elapsed_days,
            f_q_hz: r.f_q,
            f_r_hz: r.f_r,
            mean_t1_s: r.mean_t1,
        })
        .collect();
    let mut json = serde_json::to_string_pretty(&out).unwrap();
    json.push('\n');
    json
}
