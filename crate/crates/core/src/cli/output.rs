//! Output files and their JSON sidecars.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::RunConfig;
use crate::pattern::PatternSeries;
use crate::rng::RNG_ALGORITHM;

/// Sidecar path for an output file: `name.ext` → `name.ext.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Writes `path` with `body` and a sidecar holding the config echo and `data`.
pub fn write_with_sidecar<F>(cfg: &RunConfig, path: &Path, tolerances: &Value, data: Value, body: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    let meta = json!({
        "command": cfg.command,
        "config": cfg.settings,
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "rng": RNG_ALGORITHM,
        "tolerances": tolerances,
        "file": path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "data": data,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(io::Error::other)?;
    fs::write(sidecar_path(path), text + "\n")
}

pub fn write_series(cfg: &RunConfig, name: &str, series: &PatternSeries, tolerances: &Value) -> io::Result<PathBuf> {
    let path = cfg.out.join(format!("{name}.csv"));
    write_with_sidecar(cfg, &path, tolerances, series.metadata(), |w| series.write_csv(w))?;
    if cfg.plot {
        write_plot_script(cfg, &path, &format!("{} {}", series.source, name))?;
    }
    Ok(path)
}

/// gnuplot script plotting `value` against `u`; undefined rows are skipped.
pub fn write_plot_script(cfg: &RunConfig, csv: &Path, title: &str) -> io::Result<()> {
    let file = csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let script = format!(
        "set datafile separator ','\nset datafile missing 'null'\nset key autotitle columnhead\n\
         set xlabel 'u'\nset title '{title}'\nset terminal pngcairo size 900,600\n\
         set output '{stem}.png'\nplot '{file}' using 2:4 with lines\n",
        title = title.replace('\'', ""),
        stem = file.trim_end_matches(".csv"),
    );
    let path = csv.with_extension("gp");
    write_with_sidecar(cfg, &path, &Value::Null, json!({"plots": file}), |w| w.write_all(script.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar_path(Path::new("out/a.csv")), PathBuf::from("out/a.csv.meta.json"));
    }
}
