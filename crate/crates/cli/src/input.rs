use std::path::Path;

use mmmd::SampleMatrix;

use crate::CliError;

/// Reads a numeric CSV: rows are observations, columns are dimensions.
///
/// A first row that does not parse as numbers is taken as a header. Every
/// later row must be numeric and as wide as the first data row.
pub fn read_matrix(path: &Path) -> Result<SampleMatrix, CliError> {
    let shown = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{shown}: {e}")))?;
    let mut values = Vec::new();
    let mut cols = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{shown}: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(CliError::Input(format!("{shown}: line {}: non-numeric cell", line + 1)));
            }
        };
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(CliError::Input(format!(
                    "{shown}: line {}: expected {c} columns, found {}",
                    line + 1,
                    row.len()
                )));
            }
            Some(_) => {}
        }
        values.extend(row);
    }
    let cols = cols.ok_or_else(|| CliError::Input(format!("{shown}: no data rows")))?;
    SampleMatrix::new(values, cols).map_err(|e| CliError::Input(format!("{shown}: {e}")))
}
