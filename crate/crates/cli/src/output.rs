use crate::analysis::RunOutput;
use crate::config::Format;
use crate::error::Result;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Shortest round-trip decimal (`{}` on `f64`), empty for `None`.
fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn eigen_csv(out: &RunOutput) -> String {
    let mut s = String::from("scenario,variant,sweep_index,eigen_index,re,im,damping,label,matched_from\n");
    for r in &out.eigen {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.variant,
            r.sweep_index,
            r.eigen_index,
            r.re,
            r.im,
            r.damping,
            r.label,
            opt(r.matched_from)
        );
    }
    s
}

pub fn loci_csv(out: &RunOutput) -> String {
    let mut s = String::from("variant,locus,step,value,re,im\n");
    for p in &out.loci {
        let _ = writeln!(s, "{},{},{},{},{},{}", p.variant, p.locus, p.step, p.value, p.re, p.im);
    }
    s
}

pub fn spectra_csv(out: &RunOutput) -> String {
    let mut s = String::from("variant,signal,channel,order,re,im,magnitude_pu\n");
    for r in &out.spectra {
        let _ = writeln!(s, "{},{},{},{},{},{},{}", r.variant, r.signal, r.channel, r.order, r.re, r.im, r.magnitude_pu);
    }
    s
}

const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Scatter of the loci (or of the eigenvalues when there are none) in the
/// complex plane, one colour per variant.
pub fn loci_svg(out: &RunOutput) -> String {
    let mut pts: Vec<(&str, f64, f64)> = out.loci.iter().map(|p| (p.variant.as_str(), p.re, p.im)).collect();
    if pts.is_empty() {
        pts = out.eigen.iter().filter(|e| e.label != "edge").map(|e| (e.variant.as_str(), e.re, e.im)).collect();
    }
    let (w, h, m) = (800.0, 600.0, 50.0);
    let mut variants: Vec<&str> = pts.iter().map(|p| p.0).collect();
    variants.dedup();
    let fold = |f: fn(&(&str, f64, f64)) -> f64, init: f64, g: fn(f64, f64) -> f64| pts.iter().map(f).fold(init, g);
    let (x0, x1) = (fold(|p| p.1, f64::INFINITY, f64::min), fold(|p| p.1, f64::NEG_INFINITY, f64::max));
    let (y0, y1) = (fold(|p| p.2, f64::INFINITY, f64::min), fold(|p| p.2, f64::NEG_INFINITY, f64::max));
    let sx = if x1 > x0 { (w - 2.0 * m) / (x1 - x0) } else { 1.0 };
    let sy = if y1 > y0 { (h - 2.0 * m) / (y1 - y0) } else { 1.0 };
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n");
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(s, "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", w - 2.0 * m, h - 2.0 * m);
    if x0 <= 0.0 && x1 >= 0.0 && x1 > x0 {
        let x = m + (0.0 - x0) * sx;
        let _ = writeln!(s, "<line x1=\"{x}\" y1=\"{m}\" x2=\"{x}\" y2=\"{}\" stroke=\"grey\" stroke-dasharray=\"4\"/>", h - m);
    }
    for (px, py, text) in [(m, h - m + 20.0, format!("Re {x0:.3e}")), (w - m - 120.0, h - m + 20.0, format!("Re {x1:.3e}")), (5.0, m - 10.0, format!("Im {y1:.3e}")), (5.0, h - 5.0, format!("Im {y0:.3e}"))] {
        let _ = writeln!(s, "<text x=\"{px}\" y=\"{py}\">{text}</text>");
    }
    for (k, v) in variants.iter().enumerate() {
        let c = COLOURS[k % COLOURS.len()];
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" fill=\"{c}\">{v}</text>", w - m - 150.0, m + 15.0 * (k + 1) as f64);
    }
    for (v, re, im) in &pts {
        let k = variants.iter().position(|x| x == v).unwrap_or(0);
        let (cx, cy) = (m + (re - x0) * sx, h - m - (im - y0) * sy);
        let _ = writeln!(s, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2\" fill=\"{}\"/>", COLOURS[k % COLOURS.len()]);
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the selected artefacts into `dir`; returns the written paths.
pub fn write_outputs(out: &RunOutput, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files: Vec<(&str, String)> = Vec::new();
    if formats.contains(&Format::Csv) {
        files.push(("eigenvalues.csv", eigen_csv(out)));
        files.push(("loci.csv", loci_csv(out)));
        files.push(("spectra.csv", spectra_csv(out)));
    }
    if formats.contains(&Format::Json) {
        let mut j = serde_json::to_string_pretty(&out.report).expect("report serialises");
        j.push('\n');
        files.push(("report.json", j));
    }
    if formats.contains(&Format::Svg) {
        files.push(("loci.svg", loci_svg(out)));
    }
    let mut written = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        written.push(p);
    }
    Ok(written)
}
