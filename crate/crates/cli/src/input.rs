use std::fs;
use std::path::Path;

use wavefock::builtin;
use wavefock::linalg::c;
use wavefock::fock::ChoiMatrix;
use wavefock::subdivision::SignalWindow;
use wavefock::FilterBank;

use crate::{CliError, Source};

pub const RANDOM_BANKS: &[&str] = &["random-biorthogonal", "random-orthogonal"];

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn load_bank(src: &Source) -> Result<FilterBank, CliError> {
    if let Some(path) = &src.input {
        return parse_json(path);
    }
    let name = src.builtin.as_deref().unwrap_or("haar");
    if let Some(bank) = builtin::by_name(name) {
        return Ok(bank);
    }
    let mut rng = builtin::rng(src.seed);
    match name {
        "random-biorthogonal" => Ok(builtin::random_biorthogonal_bank(src.scale, src.degree, &mut rng)),
        "random-orthogonal" => Ok(builtin::random_orthogonal_bank(src.scale, src.degree, &mut rng)),
        _ => Err(CliError::Parse(format!(
            "unknown bank '{name}' (known: {}, {})",
            builtin::BANK_NAMES.join(", "),
            RANDOM_BANKS.join(", ")
        ))),
    }
}

pub fn load_choi(src: &Source, letters: usize) -> Result<ChoiMatrix, CliError> {
    if let Some(path) = &src.input {
        return parse_json(path);
    }
    let name = src.builtin.as_deref().unwrap_or("cuntz");
    ChoiMatrix::by_name(name, letters)
        .ok_or_else(|| CliError::Parse(format!("unknown Choi matrix '{name}' (known: cuntz, collapse)")))
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    parse_json(path)
}

/// Signal CSV: `index,re[,im]` rows, optional header, indices consecutive.
pub fn load_signal(path: &Path) -> Result<SignalWindow, CliError> {
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(i64, f64, f64)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        let field = |i: usize| rec.get(i).map(str::to_owned);
        let Some(first) = field(0) else { continue };
        let Ok(index) = first.parse::<i64>() else {
            if line == 0 {
                continue;
            }
            return Err(CliError::Parse(format!("{}: bad index '{first}' on row {}", path.display(), line + 1)));
        };
        let num = |i: usize, default: Option<f64>| -> Result<f64, CliError> {
            match field(i) {
                Some(s) if !s.is_empty() => s
                    .parse::<f64>()
                    .map_err(|_| CliError::Parse(format!("{}: bad number '{s}' on row {}", path.display(), line + 1))),
                _ => default.ok_or_else(|| CliError::Parse(format!("{}: missing value on row {}", path.display(), line + 1))),
            }
        };
        rows.push((index, num(1, None)?, num(2, Some(0.0))?));
    }
    if rows.is_empty() {
        return Ok(SignalWindow::empty());
    }
    for w in rows.windows(2) {
        if w[1].0 != w[0].0 + 1 {
            return Err(CliError::Parse(format!("{}: indices must be consecutive", path.display())));
        }
    }
    let samples = rows.iter().map(|&(_, re, im)| c(re, im)).collect();
    Ok(SignalWindow::new(rows[0].0, samples))
}
