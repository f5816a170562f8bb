//! CSV datasets: a header `x1,...,xd,y` followed by one observation per row.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use parnet::Dataset;

use crate::error::{CliError, Result};

/// Input columns read from a CSV file; `ys` is present when the header ends
/// with a `y` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub dim: usize,
    pub xs: Vec<f64>,
    pub ys: Option<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.xs.len() / self.dim
    }

    pub fn into_dataset(self) -> Result<Dataset> {
        let ys = self
            .ys
            .ok_or_else(|| CliError::Data("the input has no 'y' column".into()))?;
        Ok(Dataset::new(self.dim, self.xs, ys)?)
    }
}

fn header_dim(header: &csv::StringRecord, require_y: bool) -> Result<(usize, bool)> {
    let names: Vec<&str> = header.iter().collect();
    let has_y = names.last() == Some(&"y");
    if require_y && !has_y {
        return Err(CliError::Data("the last column must be named 'y'".into()));
    }
    let features = &names[..names.len() - usize::from(has_y)];
    if features.is_empty() {
        return Err(CliError::Data("expected at least one feature column 'x1'".into()));
    }
    for (j, name) in features.iter().enumerate() {
        if *name != format!("x{}", j + 1) {
            return Err(CliError::Data(format!(
                "column {} is named '{name}', expected 'x{}'",
                j + 1,
                j + 1
            )));
        }
    }
    Ok((features.len(), has_y))
}

/// Reads a table with header `x1..xd[,y]`. With `require_y` the `y` column
/// is mandatory.
pub fn read_table(path: &Path, require_y: bool) -> Result<Table> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    let (dim, has_y) = header_dim(&header, require_y)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!("{}:{line}: '{field}' is not a number", path.display()))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("{}:{line}: non-finite value", path.display())));
            }
            if j < dim {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    if xs.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Table {
        dim,
        xs,
        ys: has_y.then_some(ys),
    })
}

/// Writes `x1..xd[,y],<extra>` rows.
pub fn write_table(path: &Path, table: &Table, extra: Option<(&str, &[f64])>) -> Result<()> {
    let mut body = String::new();
    let mut header: Vec<String> = (1..=table.dim).map(|j| format!("x{j}")).collect();
    if table.ys.is_some() {
        header.push("y".into());
    }
    if let Some((name, _)) = extra {
        header.push(name.into());
    }
    body.push_str(&header.join(","));
    body.push('\n');
    for i in 0..table.rows() {
        let mut row: Vec<String> = table.xs[i * table.dim..(i + 1) * table.dim]
            .iter()
            .map(f64::to_string)
            .collect();
        if let Some(ys) = &table.ys {
            row.push(ys[i].to_string());
        }
        if let Some((_, values)) = extra {
            row.push(values[i].to_string());
        }
        body.push_str(&row.join(","));
        body.push('\n');
    }
    write_file(path, body.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_features_and_response() {
        let f = write("x1,x2,y\n1,2,3\n4, 5 ,6\n");
        let t = read_table(f.path(), true).unwrap();
        assert_eq!(t.dim, 2);
        assert_eq!(t.xs, vec![1.0, 2.0, 4.0, 5.0]);
        assert_eq!(t.ys, Some(vec![3.0, 6.0]));
    }

    #[test]
    fn response_is_optional_for_prediction_inputs() {
        let f = write("x1\n0.5\n");
        assert_eq!(read_table(f.path(), false).unwrap().ys, None);
        assert!(read_table(f.path(), true).is_err());
    }

    #[test]
    fn rejects_malformed_input() {
        for body in ["a,y\n1,2\n", "x1,y\n1,abc\n", "x1,y\n1\n", "x1,y\n", "x2,y\n1,2\n", "x1,y\n1,inf\n"] {
            let err = read_table(write(body).path(), true).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{body:?} gave {err}");
        }
    }

    #[test]
    fn round_trips_through_write() {
        let t = Table {
            dim: 1,
            xs: vec![-0.25, 0.125],
            ys: Some(vec![1.5, 2.0]),
        };
        let out = tempfile::NamedTempFile::new().unwrap();
        write_table(out.path(), &t, Some(("prediction", &[0.0, 1.0]))).unwrap();
        let text = std::fs::read_to_string(out.path()).unwrap();
        assert_eq!(text, "x1,y,prediction\n-0.25,1.5,0\n0.125,2,1\n");
    }
}
