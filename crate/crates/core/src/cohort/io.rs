use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{ClinicalVar, Cohort, Patient, Schema, Value, VarKind, CLINICAL_PREFIX, FEATURE_PREFIX};
use crate::error::{Error, Result};

struct Layout {
    id: usize,
    time: usize,
    event: usize,
    clinical: Vec<(String, usize)>,
    features: Vec<usize>,
}

fn layout(headers: &csv::StringRecord) -> Result<Layout> {
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id = find("id")?;
    let time = find("time")?;
    let event = find("event")?;

    let clinical = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix(CLINICAL_PREFIX).map(|n| (n.to_string(), i)))
        .collect();

    let mut feats: Vec<(usize, usize)> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(k) = h.strip_prefix(FEATURE_PREFIX) {
            let k: usize = k
                .parse()
                .map_err(|_| Error::invalid(format!("malformed feature column `{h}`")))?;
            feats.push((k, i));
        }
    }
    feats.sort();
    for (expected, &(k, _)) in feats.iter().enumerate() {
        if k != expected {
            return Err(Error::MissingColumn(format!("{FEATURE_PREFIX}{expected}")));
        }
    }
    for (i, h) in headers.iter().enumerate() {
        let known = i == id
            || i == time
            || i == event
            || h.starts_with(CLINICAL_PREFIX)
            || h.starts_with(FEATURE_PREFIX);
        if !known {
            return Err(Error::invalid(format!("unexpected column `{h}`")));
        }
    }
    Ok(Layout {
        id,
        time,
        event,
        clinical,
        features: feats.into_iter().map(|(_, i)| i).collect(),
    })
}

fn read_records(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        rows.push(rec.map_err(|e| Error::row(i + 1, e.to_string()))?);
    }
    Ok((headers, rows))
}

fn parse_num(row: usize, column: &str, raw: &str) -> Result<f64> {
    if raw.is_empty() {
        return Err(Error::row(row, format!("missing value in column `{column}`")));
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::row(row, format!("non-numeric value `{raw}` in column `{column}`"))),
    }
}

/// Loads a cohort CSV against a declared schema. Rows are numbered from 1,
/// not counting the header.
pub fn load_cohort(path: impl AsRef<Path>, schema: &Schema) -> Result<Cohort> {
    let (headers, rows) = read_records(path.as_ref())?;
    parse_rows(&headers, &rows, schema)
}

/// Loads a cohort CSV, inferring the schema: a clinical column whose values
/// all parse as numbers is continuous, anything else is categorical over the
/// observed values.
pub fn load_cohort_inferred(path: impl AsRef<Path>) -> Result<Cohort> {
    let (headers, rows) = read_records(path.as_ref())?;
    let layout = layout(&headers)?;
    let vars = layout
        .clinical
        .iter()
        .map(|(name, col)| {
            let values: Vec<&str> = rows.iter().map(|r| r.get(*col).unwrap_or("")).collect();
            if values.iter().all(|v| v.parse::<f64>().is_ok_and(f64::is_finite)) {
                ClinicalVar::continuous(name.clone())
            } else {
                let cats: BTreeSet<&str> = values.into_iter().filter(|v| !v.is_empty()).collect();
                ClinicalVar::categorical(name.clone(), cats)
            }
        })
        .collect();
    parse_rows(&headers, &rows, &Schema::new(vars))
}

fn parse_rows(headers: &csv::StringRecord, rows: &[csv::StringRecord], schema: &Schema) -> Result<Cohort> {
    let layout = layout(headers)?;
    let mut clinical_cols = Vec::with_capacity(schema.len());
    for var in &schema.vars {
        let col = layout
            .clinical
            .iter()
            .find(|(n, _)| *n == var.name)
            .map(|&(_, c)| c)
            .ok_or_else(|| Error::MissingColumn(format!("{CLINICAL_PREFIX}{}", var.name)))?;
        clinical_cols.push(col);
    }
    if let Some((extra, _)) = layout.clinical.iter().find(|(n, _)| schema.index_of(n).is_none()) {
        return Err(Error::invalid(format!("column `{CLINICAL_PREFIX}{extra}` not declared in schema")));
    }

    let mut patients = Vec::with_capacity(rows.len());
    let mut seen = std::collections::HashSet::new();
    for (i, rec) in rows.iter().enumerate() {
        let row = i + 1;
        let get = |c: usize| rec.get(c).unwrap_or("");
        let id = get(layout.id).to_string();
        if id.is_empty() {
            return Err(Error::row(row, "missing id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::row(row, format!("duplicate id `{id}`")));
        }
        let time = parse_num(row, "time", get(layout.time))?;
        if time < 0.0 {
            return Err(Error::row(row, format!("negative time {time}")));
        }
        let event = match get(layout.event) {
            "0" => false,
            "1" => true,
            other => return Err(Error::row(row, format!("event must be 0 or 1, got `{other}`"))),
        };
        let mut clinical = Vec::with_capacity(schema.len());
        for (var, &col) in schema.vars.iter().zip(&clinical_cols) {
            let raw = get(col);
            let column = format!("{CLINICAL_PREFIX}{}", var.name);
            clinical.push(match &var.kind {
                VarKind::Continuous => Value::Num(parse_num(row, &column, raw)?),
                VarKind::Categorical(cats) => {
                    if raw.is_empty() {
                        return Err(Error::row(row, format!("missing value in column `{column}`")));
                    }
                    if cats.binary_search_by(|c| c.as_str().cmp(raw)).is_err() {
                        return Err(Error::row(row, format!("unknown category `{raw}` in column `{column}`")));
                    }
                    Value::Cat(raw.to_string())
                }
            });
        }
        let features = layout
            .features
            .iter()
            .enumerate()
            .map(|(k, &c)| parse_num(row, &format!("{FEATURE_PREFIX}{k}"), get(c)))
            .collect::<Result<Vec<_>>>()?;
        patients.push(Patient {
            id,
            time,
            event,
            clinical,
            features,
        });
    }
    Cohort::new(patients, schema.clone(), layout.features.len())
}

pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Writes a cohort in canonical form: schema column order, shortest
/// round-tripping number formatting.
pub fn write_cohort(cohort: &Cohort, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["id".to_string(), "time".into(), "event".into()];
    header.extend(cohort.schema.names().map(|n| format!("{CLINICAL_PREFIX}{n}")));
    header.extend((0..cohort.feature_dim).map(|k| format!("{FEATURE_PREFIX}{k}")));
    w.write_record(&header)?;
    for p in &cohort.patients {
        let mut rec = vec![p.id.clone(), fmt_num(p.time), if p.event { "1" } else { "0" }.to_string()];
        rec.extend(p.clinical.iter().map(|v| match v {
            Value::Num(x) => fmt_num(*x),
            Value::Cat(s) => s.clone(),
        }));
        rec.extend(p.features.iter().map(|&x| fmt_num(x)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a schema file: one `name = continuous` or
/// `name = categorical: a,b,c` line per variable; `#` starts a comment.
pub fn read_schema(path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vars = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, kind) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("schema line {}: expected `name = kind`", lineno + 1)))?;
        let (name, kind) = (name.trim(), kind.trim());
        let var = if kind == "continuous" {
            ClinicalVar::continuous(name)
        } else if let Some(cats) = kind.strip_prefix("categorical:") {
            ClinicalVar::categorical(name, cats.split(',').map(str::trim).filter(|c| !c.is_empty()))
        } else {
            return Err(Error::Config(format!("schema line {}: unknown kind `{kind}`", lineno + 1)));
        };
        vars.push(var);
    }
    Ok(Schema::new(vars))
}

pub fn write_schema(schema: &Schema, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for var in &schema.vars {
        match &var.kind {
            VarKind::Continuous => out.push_str(&format!("{} = continuous\n", var.name)),
            VarKind::Categorical(c) => out.push_str(&format!("{} = categorical: {}\n", var.name, c.join(","))),
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
