//! CSV, JSON and plot-script emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// One CSV cell.
pub enum Cell<'a> {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(&'a str),
}

impl Cell<'_> {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Num(x) => write!(out, "{x:.16e}"),
            Cell::Int(n) => write!(out, "{n}"),
            Cell::Bool(b) => write!(out, "{b}"),
            Cell::Text(s) => write!(out, "{s}"),
        }
        .expect("writing to a String");
    }
}

pub fn write_csv<'a>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<Cell<'a>>>,
) -> anyhow::Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            cell.render(&mut text);
        }
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes `plot_<name>.py`, which reads only `<name>.csv` from its own directory.
pub fn write_plot(dir: &Path, name: &str) -> anyhow::Result<()> {
    let body = match name {
        "check" | "dispersion" => PLOT_DISPERSION,
        "envelope" => PLOT_ENVELOPE,
        "linear_decay" => PLOT_LINEAR_DECAY,
        "simulate" => PLOT_SIMULATE,
        "integrals" => PLOT_INTEGRALS,
        other => anyhow::bail!("no plot template for {other}"),
    };
    let script = format!("{PLOT_PREAMBLE}\nSTEM = \"{name}\"\nrows = read_rows(STEM)\n{body}");
    let path = dir.join(format!("plot_{name}.py"));
    fs::write(&path, script).with_context(|| format!("writing {}", path.display()))
}

const PLOT_PREAMBLE: &str = r#"import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read_rows(stem):
    with open(HERE / f"{stem}.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def col(rows, key):
    return [float(r[key]) for r in rows]
"#;

const PLOT_DISPERSION: &str = r#"
pos = [r for r in rows if float(r["xi"]) > 0]
xi = col(pos, "xi")
fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))
ax0.loglog(xi, [-x for x in col(pos, "re_lambda_plus")], label="-Re lambda+")
ax0.loglog(xi, [-x for x in col(pos, "re_lambda_minus")], label="-Re lambda-")
ax0.set_xlabel("xi")
ax0.legend()
ax1.semilogx(xi, col(pos, "im_lambda_plus"), label="Im lambda+")
ax1.semilogx(xi, col(pos, "im_lambda_minus"), label="Im lambda-")
ax1.set_xlabel("xi")
ax1.legend()
fig.tight_layout()
fig.savefig(HERE / f"{STEM}.png", dpi=150)
"#;

const PLOT_ENVELOPE: &str = r#"
fig, ax = plt.subplots(figsize=(6, 4))
for t in sorted({r["t"] for r in rows}, key=float):
    sel = [r for r in rows if r["t"] == t and float(r["xi"]) > 0]
    line, = ax.semilogx(col(sel, "xi"), col(sel, "opnorm"), label=f"t = {float(t):g}")
    ax.semilogx(col(sel, "xi"), col(sel, "bound"), "--", color=line.get_color())
ax.set_xlabel("xi")
ax.set_ylabel("operator norm")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / f"{STEM}.png", dpi=150)
"#;

const PLOT_LINEAR_DECAY: &str = r#"
fig, ax = plt.subplots(figsize=(6, 4))
for ell in sorted({r["ell"] for r in rows}, key=int):
    sel = [r for r in rows if r["ell"] == ell]
    ax.loglog([1 + t for t in col(sel, "t")], col(sel, "norm"), label=f"l = {ell}")
ax.set_xlabel("1 + t")
ax.set_ylabel("norm")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / f"{STEM}.png", dpi=150)
"#;

const PLOT_SIMULATE: &str = r#"
t = [1 + x for x in col(rows, "t")]
fig, ax = plt.subplots(figsize=(6, 4))
for key in ("norm_s_minus_1", "norm_l2", "E_s", "triple"):
    ax.loglog(t, col(rows, key), label=key)
ax.set_xlabel("1 + t")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / f"{STEM}.png", dpi=150)
"#;

const PLOT_INTEGRALS: &str = r#"
fig, ax = plt.subplots(figsize=(6, 4))
for name in sorted({r["name"] for r in rows}):
    sel = [r for r in rows if r["name"] == name and float(r["t"]) > 0]
    ax.semilogx(col(sel, "t"), col(sel, "value"), label=name)
ax.set_xlabel("t")
ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(HERE / f"{STEM}.png", dpi=150)
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formatting() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_csv(
            &path,
            &["a", "b", "c", "d"],
            vec![vec![
                Cell::Num(0.5),
                Cell::Int(3),
                Cell::Bool(true),
                Cell::Text("I0"),
            ]],
        )
        .unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text, "a,b,c,d\n5.0000000000000000e-1,3,true,I0\n");
    }

    #[test]
    fn every_plot_names_its_csv() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "check",
            "dispersion",
            "envelope",
            "linear_decay",
            "simulate",
            "integrals",
        ] {
            write_plot(dir.path(), name).unwrap();
            let text = fs::read_to_string(dir.path().join(format!("plot_{name}.py"))).unwrap();
            assert!(text.contains(&format!("STEM = \"{name}\"")));
        }
        assert!(write_plot(dir.path(), "nope").is_err());
    }
}
