//! Input ingestion with line/column diagnostics.
//!
//! All readers reject malformed content with a message naming the row
//! and field; stochastic rows are accepted when they sum to 1 within
//! 1e-6 and renormalized, anything further off is a real error.

use anyhow::{anyhow, bail, Context, Result};
use std::path::Path;

use infogeo::ProbabilityVector;

/// Row-sum slack for stochastic inputs; real CSVs carry round-off.
pub const ROW_SUM_TOL: f64 = 1e-6;

/// Reads a headerless numeric CSV into rows of f64.
pub fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(idx + 1);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                anyhow!(
                    "{}: line {line}, column {}: expected a number, found {field:?}",
                    path.display(),
                    col + 1
                )
            })?;
            if !value.is_finite() {
                bail!(
                    "{}: line {line}, column {}: non-finite value",
                    path.display(),
                    col + 1
                );
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

fn rectangular(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let width = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            bail!(
                "{}: row {} has {} fields, expected {width}",
                path.display(),
                i + 1,
                row.len()
            );
        }
    }
    Ok(())
}

/// Validates a stochastic row: entries nonnegative, sum within
/// [`ROW_SUM_TOL`] of one, renormalized on return.
pub fn stochastic_row(path: &Path, index: usize, row: &[f64]) -> Result<ProbabilityVector<f64>> {
    for (col, &v) in row.iter().enumerate() {
        if v < 0.0 {
            bail!(
                "{}: row {}, column {}: negative probability {v}",
                path.display(),
                index + 1,
                col + 1
            );
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        bail!(
            "{}: row {} sums to {sum}, outside the 1e-6 tolerance",
            path.display(),
            index + 1
        );
    }
    let scaled: Vec<f64> = row.iter().map(|&v| v / sum).collect();
    ProbabilityVector::new(scaled)
        .map_err(|e| anyhow!("{}: row {}: {e}", path.display(), index + 1))
}

/// Channel matrix: CSV rows (one per input letter) or a JSON 2-D array
/// when the file ends in `.json`.
pub fn read_channel(path: &Path) -> Result<infogeo::channel::DiscreteChannel<f64>> {
    let rows = if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        serde_json::from_str::<Vec<Vec<f64>>>(&text)
            .with_context(|| format!("{}: expected a JSON array of rows", path.display()))?
    } else {
        read_numeric_csv(path)?
    };
    if rows.is_empty() {
        bail!("{}: empty channel", path.display());
    }
    rectangular(path, &rows)?;
    let validated = rows
        .iter()
        .enumerate()
        .map(|(i, row)| stochastic_row(path, i, row))
        .collect::<Result<Vec<_>>>()?;
    infogeo::channel::DiscreteChannel::new(validated).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Observation matrix for the mixture fit.
pub fn read_dataset(path: &Path) -> Result<infogeo::gmm::Dataset<f64>> {
    let rows = read_numeric_csv(path)?;
    rectangular(path, &rows)?;
    infogeo::gmm::Dataset::new(rows).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Comparison counts as a full square matrix of nonnegative integers.
pub fn read_counts_matrix(path: &Path) -> Result<infogeo::ranking::ComparisonCounts> {
    let rows = read_numeric_csv(path)?;
    rectangular(path, &rows)?;
    if rows.len() != rows[0].len() {
        bail!(
            "{}: counts matrix must be square, got {}x{}",
            path.display(),
            rows.len(),
            rows[0].len()
        );
    }
    let mut counts = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, &v) in row.iter().enumerate() {
            out.push(nonneg_integer(path, i, j, v)?);
        }
        counts.push(out);
    }
    infogeo::ranking::ComparisonCounts::new(counts).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Comparison counts as `(winner, loser, count)` triplets.
pub fn read_counts_triplets(path: &Path) -> Result<infogeo::ranking::ComparisonCounts> {
    let rows = read_numeric_csv(path)?;
    let mut triplets = Vec::with_capacity(rows.len());
    let mut size = 0usize;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 3 {
            bail!(
                "{}: row {}: expected (winner, loser, count), got {} fields",
                path.display(),
                i + 1,
                row.len()
            );
        }
        let w = index_field(path, i, 1, row[0])?;
        let l = index_field(path, i, 2, row[1])?;
        let c = nonneg_integer(path, i, 2, row[2])?;
        size = size.max(w + 1).max(l + 1);
        triplets.push((w, l, c));
    }
    infogeo::ranking::ComparisonCounts::from_triplets(size, &triplets)
        .map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn nonneg_integer(path: &Path, row: usize, col: usize, v: f64) -> Result<u64> {
    if v < 0.0 || v.fract() != 0.0 {
        bail!(
            "{}: row {}, column {}: expected a nonnegative integer count, found {v}",
            path.display(),
            row + 1,
            col + 1
        );
    }
    Ok(v as u64)
}

fn index_field(path: &Path, row: usize, col: usize, v: f64) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 {
        bail!(
            "{}: row {}, column {}: expected an item index, found {v}",
            path.display(),
            row + 1,
            col
        );
    }
    Ok(v as usize)
}

/// Regression data: last column is the response; a leading intercept
/// column of ones is prepended unless `no_intercept`.
pub fn read_regression(
    path: &Path,
    no_intercept: bool,
) -> Result<infogeo::modal_regression::RegressionDataset<f64>> {
    let rows = read_numeric_csv(path)?;
    rectangular(path, &rows)?;
    if rows[0].len() < 2 {
        bail!(
            "{}: need at least one predictor column plus the response",
            path.display()
        );
    }
    let mut x = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for row in &rows {
        let (resp, preds) = row.split_last().unwrap();
        let mut design_row = Vec::with_capacity(preds.len() + 1);
        if !no_intercept {
            design_row.push(1.0);
        }
        design_row.extend_from_slice(preds);
        x.push(design_row);
        y.push(*resp);
    }
    infogeo::modal_regression::RegressionDataset::new(x, y)
        .map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Expectation-coordinate points, one per row.
pub fn read_eta_points(
    path: &Path,
    spec: &infogeo::epca::ExpFamilySpec<f64>,
) -> Result<Vec<infogeo::epca::DualPoint<f64>>> {
    let rows = read_numeric_csv(path)?;
    rectangular(path, &rows)?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            infogeo::epca::DualPoint::from_eta(spec, row.clone())
                .map_err(|e| anyhow!("{}: row {}: {e}", path.display(), i + 1))
        })
        .collect()
}

/// Visible distribution as `(bitstring, probability)` rows. Character
/// position `j` of the bitstring (left to right) is unit `j`; states
/// not listed carry zero mass.
pub fn read_visible_dist(path: &Path) -> Result<(usize, ProbabilityVector<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut visible = 0usize;
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(idx + 1);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 2 {
            bail!(
                "{}: line {line}: expected (bitstring, probability), got {} fields",
                path.display(),
                record.len()
            );
        }
        let bits = record.get(0).unwrap();
        if bits.is_empty() || !bits.chars().all(|c| c == '0' || c == '1') {
            bail!(
                "{}: line {line}, column 1: expected a 0/1 bitstring, found {bits:?}",
                path.display()
            );
        }
        if visible == 0 {
            visible = bits.len();
            if visible > 20 {
                bail!("{}: line {line}: more than 20 visible units", path.display());
            }
        } else if bits.len() != visible {
            bail!(
                "{}: line {line}: bitstring length {} differs from {visible}",
                path.display(),
                bits.len()
            );
        }
        let mut state = 0usize;
        for (unit, c) in bits.chars().enumerate() {
            if c == '1' {
                state |= 1 << unit;
            }
        }
        let prob: f64 = record.get(1).unwrap().parse().map_err(|_| {
            anyhow!(
                "{}: line {line}, column 2: expected a probability",
                path.display()
            )
        })?;
        if !(0.0..=1.0 + ROW_SUM_TOL).contains(&prob) {
            bail!(
                "{}: line {line}, column 2: probability {prob} outside [0, 1]",
                path.display()
            );
        }
        entries.push((state, prob));
    }
    if entries.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let mut dist = vec![0.0; 1usize << visible];
    for (state, prob) in entries {
        dist[state] += prob;
    }
    let row = stochastic_row(path, 0, &dist)?;
    Ok((visible, row))
}
