use std::fmt;
use std::path::Path;

use fattail::Sample;

#[derive(Debug)]
pub enum IngestError {
    Io(String),
    Parse { line: u64, msg: String },
    Empty,
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IngestError::Io(m) => write!(f, "cannot read input: {m}"),
            IngestError::Parse { line, msg } => write!(f, "line {line}: {msg}"),
            IngestError::Empty => write!(f, "input holds no values"),
        }
    }
}

impl std::error::Error for IngestError {}

/// One finite number per row. A first row that does not parse is taken as a
/// header; blank lines are skipped.
pub fn ingest_csv(path: &Path) -> Result<Sample, IngestError> {
    let rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IngestError::Io(e.to_string()))?;
    let name = path.file_stem().map_or("input".into(), |s| s.to_string_lossy().into_owned());
    read_values(rdr, name)
}

#[cfg(test)]
pub fn ingest_str(text: &str) -> Result<Sample, IngestError> {
    let rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    read_values(rdr, "input".into())
}

fn read_values<R: std::io::Read>(mut rdr: csv::Reader<R>, name: String) -> Result<Sample, IngestError> {
    let mut values = Vec::new();
    let mut first = true;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IngestError::Parse { line, msg: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = rec.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if fields.len() != 1 {
            return Err(IngestError::Parse { line, msg: format!("expected one value per row, found {}", fields.len()) });
        }
        let field = fields[0];
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => return Err(IngestError::Parse { line, msg: format!("non-finite value '{field}'") }),
            Err(_) if first => {}
            Err(_) => return Err(IngestError::Parse { line, msg: format!("cannot parse '{field}' as a number") }),
        }
        first = false;
    }
    if values.is_empty() {
        return Err(IngestError::Empty);
    }
    Sample::named(values, name).map_err(|e| IngestError::Io(e.to_string()))
}
