use std::collections::BTreeMap;
use std::io::Read;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KappaError {
    #[error("rater label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no labels")]
    EmptyInput,
    #[error("rater CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("rater CSV row {row}: expected two columns, found {found}")]
    Columns { row: usize, found: usize },
}

/// Cohen's kappa for two raters over the same items.
///
/// `(p_o - p_e) / (1 - p_e)` with `p_o` the observed agreement and `p_e`
/// the agreement expected from the raters' label marginals. When both
/// raters use one identical label throughout, `p_e = 1` and the result is 1.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64, KappaError> {
    if a.len() != b.len() {
        return Err(KappaError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(KappaError::EmptyInput);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let p_o = agree / n;

    let mut marginals: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    for x in a {
        marginals.entry(x).or_default().0 += 1;
    }
    for y in b {
        marginals.entry(y).or_default().1 += 1;
    }
    let p_e: f64 = marginals
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Reads a two-column CSV of rater labels. Values are trimmed.
pub fn read_rater_csv(reader: impl Read, has_headers: bool) -> Result<(Vec<String>, Vec<String>), KappaError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .from_reader(reader);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(KappaError::Columns {
                row: i + 1,
                found: rec.len(),
            });
        }
        a.push(rec[0].trim().to_string());
        b.push(rec[1].trim().to_string());
    }
    Ok((a, b))
}
