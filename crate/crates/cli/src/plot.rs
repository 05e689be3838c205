//! Tidy plot data reshaped from result CSVs.

use std::fs;
use std::path::{Path, PathBuf};

use critflow::report::CSV_HEADER;

use crate::error::{CliError, Result};

/// Available views.
pub const VIEWS: [&str; 3] = ["holder", "mlevel", "picard"];

const REQUIRED: [&str; 7] = ["experiment", "seed", "axis", "axis_value", "quantity", "value", "std_error"];

/// One parsed result row.
#[derive(Debug, Clone)]
struct Row {
    experiment: String,
    seed: u64,
    axis: String,
    axis_value: f64,
    quantity: String,
    value: f64,
    std_error: f64,
}

fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let Some(header) = lines.next() else {
        return Ok(Vec::new());
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = cols
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| CliError::View(format!("missing column `{name}`")))?;
    }
    let num = |s: &str| -> Result<f64> {
        s.trim().parse().map_err(|_| CliError::View(format!("bad number `{s}`")))
    };
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(CliError::View(format!("row has {} fields, header {}", f.len(), cols.len())));
            }
            Ok(Row {
                experiment: f[idx[0]].to_string(),
                seed: f[idx[1]].trim().parse().map_err(|_| CliError::View(format!("bad seed `{}`", f[idx[1]])))?,
                axis: f[idx[2]].to_string(),
                axis_value: num(f[idx[3]])?,
                quantity: f[idx[4]].to_string(),
                value: num(f[idx[5]])?,
                std_error: num(f[idx[6]])?,
            })
        })
        .collect()
}

fn n(v: f64) -> String {
    format!("{v:?}")
}

/// Reshape result CSV texts into the tidy CSV of `view`, rows grouped by seed.
pub fn emit_plot_data(inputs: &[String], view: &str) -> Result<String> {
    let mut rows = Vec::new();
    for text in inputs {
        rows.extend(parse_csv(text)?);
    }
    rows.sort_by_key(|r| r.seed);
    match view {
        "holder" => Ok(holder(&rows)),
        "mlevel" => Ok(mlevel(&rows)),
        "picard" => Ok(picard(&rows)),
        other => Err(CliError::View(format!("unknown view `{other}`; available: {}", VIEWS.join(", ")))),
    }
}

/// Log increment against log moment, then one slope row per series.
fn holder(rows: &[Row]) -> String {
    let mut s = String::from("seed,experiment,kind,axis,log_increment,log_moment,std_error,slope\n");
    let mut series: Vec<(u64, &str, &str)> = Vec::new();
    for r in rows.iter().filter(|r| r.quantity == "moment" && matches!(r.axis.as_str(), "t" | "s" | "x")) {
        s.push_str(&format!(
            "{},{},point,{},{},{},{},\n",
            r.seed,
            r.experiment,
            r.axis,
            n(r.axis_value.ln()),
            n(r.value.ln()),
            n(r.std_error / r.value)
        ));
        let key = (r.seed, r.experiment.as_str(), r.axis.as_str());
        if !series.contains(&key) {
            series.push(key);
        }
    }
    for (seed, exp, axis) in series {
        let name = format!("holder_{axis}.slope");
        if let Some(f) = rows.iter().find(|r| r.seed == seed && r.experiment == exp && r.axis == "fit" && r.quantity == name) {
            s.push_str(&format!("{seed},{exp},slope,{axis},,,{},{}\n", n(f.std_error), n(f.value)));
        }
    }
    s
}

/// Mollification level against each quantity.
fn mlevel(rows: &[Row]) -> String {
    let mut s = String::from("seed,experiment,quantity,m,value,std_error\n");
    for r in rows.iter().filter(|r| r.axis == "m") {
        s.push_str(&format!("{},{},{},{},{},{}\n", r.seed, r.experiment, r.quantity, n(r.axis_value), n(r.value), n(r.std_error)));
    }
    s
}

/// Picard iteration against the relative residual of each window.
fn picard(rows: &[Row]) -> String {
    let mut s = String::from("seed,experiment,window,iteration,residual\n");
    for r in rows.iter().filter(|r| r.axis == "iteration") {
        let window = r.quantity.strip_prefix("residual_w").unwrap_or(&r.quantity);
        s.push_str(&format!("{},{},{},{},{}\n", r.seed, r.experiment, window, r.axis_value as u64, n(r.value)));
    }
    s
}

/// Every `results.csv` below `dir`, sorted by path.
pub fn collect_results(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = fs::read_dir(&d).map_err(|e| CliError::io(&d, e))?;
        for entry in entries {
            let path = entry.map_err(|e| CliError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "results.csv") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// `emit_plot_data` over every result file below `dir`.
pub fn plot_dir(dir: &Path, view: &str) -> Result<String> {
    let texts = collect_results(dir)?
        .into_iter()
        .map(|p| fs::read_to_string(&p).map_err(|e| CliError::io(&p, e)))
        .collect::<Result<Vec<_>>>()?;
    emit_plot_data(&texts, view)
}

/// Header of the result CSVs this module reads.
pub fn result_header() -> &'static str {
    CSV_HEADER
}
