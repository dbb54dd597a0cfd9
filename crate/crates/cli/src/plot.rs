//! Turns result CSVs into a standalone matplotlib script.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::output::COLUMNS;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotError(pub String);

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Curve label to `(gamma_db, sum_rate, ci_halfwidth)` points, in file order.
pub type Series = BTreeMap<String, Vec<(f64, f64, f64)>>;

pub fn read_series(paths: &[impl AsRef<Path>]) -> Result<Series, PlotError> {
    if paths.is_empty() {
        return Err(PlotError("no CSV files given".into()));
    }
    let mut out = Series::new();
    for path in paths {
        let path = path.as_ref();
        let name = path.display();
        let mut r = csv::Reader::from_path(path).map_err(|e| PlotError(format!("{name}: {e}")))?;
        let header = r.headers().map_err(|e| PlotError(format!("{name}: {e}")))?.clone();
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(PlotError(format!("{name}: file is empty")));
        }
        for (pos, want) in COLUMNS.iter().enumerate() {
            match header.get(pos) {
                Some(got) if got == *want => {}
                Some(got) => {
                    return Err(PlotError(format!(
                        "{name}: unexpected column `{got}` at position {}, expected `{want}`",
                        pos + 1
                    )))
                }
                None => return Err(PlotError(format!("{name}: missing column `{want}`"))),
            }
        }
        if let Some(extra) = header.get(COLUMNS.len()) {
            return Err(PlotError(format!("{name}: unexpected extra column `{extra}`")));
        }
        let mut rows = 0usize;
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| PlotError(format!("{name}: {e}")))?;
            let num = |i: usize| -> Result<f64, PlotError> {
                rec[i].parse().map_err(|_| {
                    PlotError(format!(
                        "{name}: row {}: column `{}` is not a number: `{}`",
                        line + 2,
                        COLUMNS[i],
                        &rec[i]
                    ))
                })
            };
            let point = (num(1)?, num(2)?, num(3)?);
            out.entry(rec[0].to_string()).or_default().push(point);
            rows += 1;
        }
        if rows == 0 {
            return Err(PlotError(format!("{name}: no data rows")));
        }
    }
    Ok(out)
}

fn py_list(values: impl Iterator<Item = f64>) -> String {
    let items: Vec<String> = values
        .map(|v| if v.is_finite() { format!("{v:?}") } else { "float('nan')".into() })
        .collect();
    format!("[{}]", items.join(", "))
}

/// Script that draws every series as sum rate against SNR with its
/// confidence band and saves the figure to `image`.
pub fn script(series: &Series, image: &str, title: &str) -> String {
    let mut s = String::new();
    s.push_str("#!/usr/bin/env python3\n");
    s.push_str("# Generated by vlc-noma plot. Data are embedded; no other input is read.\n");
    s.push_str("import matplotlib\n");
    s.push_str("matplotlib.use(\"Agg\")\n");
    s.push_str("import matplotlib.pyplot as plt\n\n");
    s.push_str("SERIES = {\n");
    for (label, pts) in series {
        let _ = writeln!(
            s,
            "    {label:?}: ({}, {}, {}),",
            py_list(pts.iter().map(|p| p.0)),
            py_list(pts.iter().map(|p| p.1)),
            py_list(pts.iter().map(|p| p.2)),
        );
    }
    s.push_str("}\n\n");
    let _ = writeln!(s, "fig, ax = plt.subplots(figsize=(6.4, 4.8))");
    s.push_str(
        "for label, (gamma, rate, ci) in SERIES.items():\n\
         \x20   style = \"--\" if \"/oma-\" in label else \"-\"\n\
         \x20   line, = ax.plot(gamma, rate, style, marker=\"o\", markersize=3, label=label)\n\
         \x20   lo = [r - c for r, c in zip(rate, ci)]\n\
         \x20   hi = [r + c for r, c in zip(rate, ci)]\n\
         \x20   ax.fill_between(gamma, lo, hi, color=line.get_color(), alpha=0.2, linewidth=0)\n",
    );
    s.push_str("ax.set_xlabel(\"Transmit SNR $\\\\gamma$ (dB)\")\n");
    s.push_str("ax.set_ylabel(\"Sum rate (bit/s/Hz)\")\n");
    let _ = writeln!(s, "ax.set_title({title:?})");
    s.push_str("ax.grid(True, alpha=0.3)\n");
    s.push_str("ax.legend(fontsize=\"small\")\n");
    s.push_str("fig.tight_layout()\n");
    let _ = writeln!(s, "fig.savefig({image:?}, dpi=150)");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn reads_and_groups_rows() {
        let d = tempfile::tempdir().unwrap();
        let p = write(
            d.path(),
            "a.csv",
            "scheme,gamma_db,sum_rate,ci_halfwidth,outage_weak,outage_strong,conditioning_rate\n\
             x,1,2,0.1,0,0,1\nx,2,3,0.1,0,0,1\ny,1,0.5,0,1,1,1\n",
        );
        let s = read_series(&[p]).unwrap();
        assert_eq!(s["x"], vec![(1.0, 2.0, 0.1), (2.0, 3.0, 0.1)]);
        assert_eq!(s.len(), 2);
        let py = script(&s, "out.png", "t");
        assert!(py.contains("\"x\": ([1.0, 2.0], [2.0, 3.0], [0.1, 0.1])"));
        assert!(py.contains("savefig(\"out.png\""));
    }

    #[test]
    fn wrong_column_named() {
        let d = tempfile::tempdir().unwrap();
        let p = write(
            d.path(),
            "a.csv",
            "scheme,gamma_db,rate,ci_halfwidth,outage_weak,outage_strong,conditioning_rate\nx,1,2,0,0,0,1\n",
        );
        let e = read_series(&[p]).unwrap_err();
        assert!(e.0.contains("`rate`"), "{e}");
    }

    #[test]
    fn empty_file_rejected() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "a.csv", "");
        assert!(read_series(&[p]).unwrap_err().0.contains("empty"));
        let p = write(
            d.path(),
            "b.csv",
            "scheme,gamma_db,sum_rate,ci_halfwidth,outage_weak,outage_strong,conditioning_rate\n",
        );
        assert!(read_series(&[p]).unwrap_err().0.contains("no data rows"));
    }

    #[test]
    fn non_numeric_value_rejected() {
        let d = tempfile::tempdir().unwrap();
        let p = write(
            d.path(),
            "a.csv",
            "scheme,gamma_db,sum_rate,ci_halfwidth,outage_weak,outage_strong,conditioning_rate\nx,1,abc,0,0,0,1\n",
        );
        assert!(read_series(&[p]).unwrap_err().0.contains("sum_rate"));
    }
}
