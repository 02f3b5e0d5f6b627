//! Static SVG and CSV views of curve CSVs and disc metrics. Nothing is
//! recomputed beyond evaluating the stored profile.

use std::path::{Path, PathBuf};

use clap::Args;

use curvlab::disc_deformations::RotMetric;
use curvlab::numeric::linspace;

use crate::{read_input, read_json, write_output, Fail};

#[derive(Args)]
pub struct ExportArgs {
    /// Curve CSV (s, theta, kappa, r, t) or disc metric JSON.
    #[arg(long)]
    input: PathBuf,
    /// Output file; the extension (.svg or .csv) picks the format.
    #[arg(long)]
    out: PathBuf,
    /// Samples when evaluating a disc metric.
    #[arg(long, default_value_t = 513)]
    samples: usize,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 40.0;

/// One polyline in a box scaled to the data, with axis labels.
pub fn svg_plot(xs: &[f64], ys: &[f64], xlabel: &str, ylabel: &str, equal_aspect: bool) -> String {
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let (x0, x1) = span(xs);
    let (y0, y1) = span(ys);
    let (mut sx, mut sy) = ((WIDTH - 2.0 * PAD) / (x1 - x0), (HEIGHT - 2.0 * PAD) / (y1 - y0));
    if equal_aspect {
        let s = sx.min(sy);
        sx = s;
        sy = s;
    }
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| format!("{:.3},{:.3}", PAD + (x - x0) * sx, HEIGHT - PAD - (y - y0) * sy))
        .collect();
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<line x1=\"{p}\" y1=\"{yb}\" x2=\"{xr}\" y2=\"{yb}\" stroke=\"gray\"/>\n",
            "<line x1=\"{p}\" y1=\"{p}\" x2=\"{p}\" y2=\"{yb}\" stroke=\"gray\"/>\n",
            "<text x=\"{xr}\" y=\"{yl}\" text-anchor=\"end\" font-size=\"12\">{xlabel} [{x0:.3}, {x1:.3}]</text>\n",
            "<text x=\"{p}\" y=\"{yt}\" font-size=\"12\">{ylabel} [{y0:.3}, {y1:.3}]</text>\n",
            "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"{pts}\"/>\n",
            "</svg>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        p = PAD,
        xr = WIDTH - PAD,
        yb = HEIGHT - PAD,
        yl = HEIGHT - PAD / 4.0,
        yt = PAD * 0.75,
        xlabel = xlabel,
        ylabel = ylabel,
        x0 = x0,
        x1 = x1,
        y0 = y0,
        y1 = y1,
        pts = pts.join(" "),
    )
}

/// The columns the plot needs; the others are ignored.
#[derive(Debug, serde::Deserialize)]
struct CurveRow {
    r: f64,
    t: f64,
}

fn read_curve(path: &Path) -> Result<Vec<CurveRow>, Fail> {
    let text = read_input(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<CurveRow> = rdr
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(Fail::Input(format!("{}: no curve samples", path.display())));
    }
    Ok(rows)
}

fn ext(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

pub fn cmd_export(a: &ExportArgs) -> Result<bool, Fail> {
    let out_ext = ext(&a.out);
    if out_ext != "svg" && out_ext != "csv" {
        return Err(Fail::Input(format!("output must end in .svg or .csv, got {}", a.out.display())));
    }
    let doc = match ext(&a.input).as_str() {
        "csv" => {
            let rows = read_curve(&a.input)?;
            if out_ext != "svg" {
                return Err(Fail::Input("a curve CSV exports to SVG only".into()));
            }
            // the curve in the (t, r) half-plane, as drawn for bending figures
            let t: Vec<f64> = rows.iter().map(|c| c.t).collect();
            let r: Vec<f64> = rows.iter().map(|c| c.r).collect();
            svg_plot(&t, &r, "t", "r", true)
        }
        "json" => {
            let g = RotMetric::from_json(&read_json(&a.input)?)?;
            if a.samples < 2 {
                return Err(Fail::Input("need at least 2 samples".into()));
            }
            let ts = linspace(0.0, g.delta, a.samples);
            if out_ext == "svg" {
                let beta: Vec<f64> = ts.iter().map(|&t| g.beta.value(t)).collect();
                svg_plot(&ts, &beta, "t", "beta", false)
            } else {
                let mut w = csv::Writer::from_writer(Vec::new());
                let err = |e: csv::Error| Fail::Input(e.to_string());
                w.write_record(["t", "alpha", "beta", "beta_d1", "beta_d2"]).map_err(err)?;
                for &t in &ts {
                    let row = [t, g.alpha.value(t), g.beta.value(t), g.beta.d1(t), g.beta.d2(t)];
                    w.write_record(row.iter().map(|x| format!("{x:.17e}"))).map_err(err)?;
                }
                String::from_utf8(w.into_inner().map_err(|e| Fail::Input(e.to_string()))?).expect("ascii csv")
            }
        }
        other => return Err(Fail::Input(format!("input must be .csv or .json, got {other:?}"))),
    };
    write_output(&a.out, &doc)?;
    Ok(true)
}
