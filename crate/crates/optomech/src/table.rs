//! CSV and structured-text artifacts with `# ` comment headers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use optomech_core::spectrum::{SpectrumKind, SpectrumRecord};

use crate::error::CliError;

/// Fixed-width scientific notation so artifacts are byte-reproducible.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.10e}")
    }
}

/// Comment lines written at the top of every artifact.
#[derive(Debug, Clone, Default)]
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(command: &str, seed: u64, echo: &[String]) -> Self {
        let mut lines = vec![format!("optomech {command}"), format!("seed = {seed}")];
        lines.extend(echo.iter().cloned());
        Self { lines }
    }

    pub fn with(mut self, line: impl Into<String>) -> Self {
        self.lines.push(line.into());
        self
    }

    fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        for l in &self.lines {
            writeln!(w, "# {l}")?;
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Writes `# ` header lines, a column row and the data rows.
pub fn write_csv<R, I>(path: &Path, header: &Header, columns: &[&str], rows: R) -> Result<PathBuf, CliError>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut file = create(path)?;
    header.write(&mut file).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| CliError::io(path, e);
    w.write_record(columns).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Numeric rows through [`fmt_num`].
pub fn write_numeric_csv(
    path: &Path,
    header: &Header,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<PathBuf, CliError> {
    write_csv(
        path,
        header,
        columns,
        rows.iter().map(|r| r.iter().map(|&v| fmt_num(v))),
    )
}

/// `freq_hz,value,unit` for densities; responses add `phase_rad` and store
/// the magnitude in `value`.
pub fn write_spectrum(path: &Path, header: &Header, rec: &SpectrumRecord) -> Result<PathBuf, CliError> {
    let unit = rec.unit().to_string();
    let freqs: Vec<f64> = rec.freqs_hz().collect();
    match rec.kind() {
        SpectrumKind::Response => {
            let vals = rec.responses().expect("response record");
            let rows = freqs
                .iter()
                .zip(vals)
                .map(|(f, z)| vec![fmt_num(*f), fmt_num(z.norm()), fmt_num(z.arg()), unit.clone()]);
            write_csv(path, header, &["freq_hz", "value", "phase_rad", "unit"], rows)
        }
        _ => {
            let vals = rec.densities().expect("density record");
            let rows = freqs
                .iter()
                .zip(vals)
                .map(|(f, v)| vec![fmt_num(*f), fmt_num(*v), unit.clone()]);
            write_csv(path, header, &["freq_hz", "value", "unit"], rows)
        }
    }
}

/// Structured text: header comments, then the body lines.
pub fn write_text(path: &Path, header: &Header, body: &[String]) -> Result<PathBuf, CliError> {
    let mut file = create(path)?;
    let io = |e| CliError::io(path, e);
    header.write(&mut file).map_err(io)?;
    for l in body {
        writeln!(file, "{l}").map_err(io)?;
    }
    file.flush().map_err(io)?;
    Ok(path.to_path_buf())
}

/// A numeric CSV read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Comment lines without the leading `#`.
    pub comments: Vec<String>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Input(format!("no column {name:?} (have {})", self.columns.join(","))))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Value of a `# key = value` or `# key: value` comment.
    pub fn tag(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once('=').or_else(|| c.split_once(':'))?;
            (k.trim() == key).then(|| v.trim())
        })
    }
}

/// Reads a CSV with a header row. Columns that do not parse as numbers
/// (such as `unit`) are dropped.
pub fn read_csv(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let comments = text
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix('#'))
        .map(|l| l.trim().to_string())
        .collect();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let input = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let names: Vec<String> = r.headers().map_err(input)?.iter().map(str::to_string).collect();
    let mut records = Vec::new();
    for rec in r.records() {
        records.push(rec.map_err(input)?);
    }
    let numeric: Vec<usize> = (0..names.len())
        .filter(|&i| {
            records
                .iter()
                .all(|rec| rec.get(i).is_some_and(|v| v.parse::<f64>().is_ok()))
        })
        .collect();
    let rows = records
        .iter()
        .map(|rec| {
            numeric
                .iter()
                .map(|&i| rec[i].parse().expect("checked numeric"))
                .collect()
        })
        .collect();
    Ok(Table {
        columns: numeric.iter().map(|&i| names[i].clone()).collect(),
        rows,
        comments,
    })
}

/// Imports a measured noise curve `freq_hz,asd`. The unit comes from a
/// `# unit = ...` header tag (m/rtHz, pm/rtHz, Hz/rtHz, ...) and the values
/// are converted to SI.
pub fn read_asd_csv(path: &Path) -> Result<SpectrumRecord, CliError> {
    let t = read_csv(path)?;
    let unit = t.tag("unit").unwrap_or("m/rtHz").replace("√Hz", "rtHz");
    let (scale, si) = match unit.as_str() {
        "m/rtHz" => (1.0, "m/rtHz"),
        "nm/rtHz" => (1e-9, "m/rtHz"),
        "pm/rtHz" => (1e-12, "m/rtHz"),
        "fm/rtHz" => (1e-15, "m/rtHz"),
        "Hz/rtHz" => (1.0, "Hz/rtHz"),
        other => {
            return Err(CliError::Input(format!(
                "{}: unsupported unit tag {other:?}",
                path.display()
            )))
        }
    };
    let f = t.column("freq_hz")?;
    let a = t.column("asd")?;
    let omegas = f.iter().map(|f| 2.0 * std::f64::consts::PI * f).collect();
    let vals = a.iter().map(|a| a * scale).collect();
    SpectrumRecord::density(SpectrumKind::Asd, omegas, vals, si)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
