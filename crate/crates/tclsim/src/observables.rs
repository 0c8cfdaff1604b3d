//! Observable extraction and serialization.
//!
//! A [`TrajectoryRecord`] is the physical view of a raw integration:
//! populations, the e1–e2 coherence (the noise-induced coherence element),
//! and conservation diagnostics per sample. [`compare`] reduces a
//! non-Markovian/Markovian pair on a common grid to the two claims the
//! model makes: coherence enhancement and slower charge-separation
//! build-up.
//!
//! CSV contract (bit-exact): header
//! `t_fs,p_g,p_e1,p_e2,p_m1,p_m2,re_c,im_c,abs_c,trace_err,min_eig`,
//! one row per sample, every float at 17 significant digits, newline
//! terminated. Writers are atomic: content goes to a temp file that is
//! renamed into place, so failed runs leave no truncated outputs.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::dynamics::{steady_state_detect, RawTrajectory};
use crate::error::{Error, Result};
use crate::DIM;

/// Sampled physical observables of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times_fs: Vec<f64>,
    /// Populations indexed by level: [g, e1, e2, m1, m2].
    pub populations: [Vec<f64>; DIM],
    pub re_coherence: Vec<f64>,
    pub im_coherence: Vec<f64>,
    pub abs_coherence: Vec<f64>,
    pub trace_error: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    /// Pre-symmetrization Hermiticity drift (diagnostic; not serialized).
    pub herm_drift: Vec<f64>,
}

/// Extract the observable record from a raw trajectory.
pub fn extract(raw: &RawTrajectory) -> TrajectoryRecord {
    let n = raw.times_fs.len();
    let mut rec = TrajectoryRecord {
        times_fs: raw.times_fs.clone(),
        populations: Default::default(),
        re_coherence: Vec::with_capacity(n),
        im_coherence: Vec::with_capacity(n),
        abs_coherence: Vec::with_capacity(n),
        trace_error: raw.trace_error.clone(),
        min_eigenvalue: raw.min_eigenvalue.clone(),
        herm_drift: raw.herm_drift.clone(),
    };
    for p in &mut rec.populations {
        p.reserve(n);
    }
    for state in &raw.states {
        for (i, pop) in rec.populations.iter_mut().enumerate() {
            pop.push(state[(i, i)].re);
        }
        let c = state[(1, 2)];
        rec.re_coherence.push(c.re);
        rec.im_coherence.push(c.im);
        rec.abs_coherence.push((c.re * c.re + c.im * c.im).sqrt());
    }
    rec
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times_fs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_fs.is_empty()
    }

    /// Steady-state onset of |ρ_{e1e2}| per the windowed-spread rule.
    pub fn steady_state(&self, window_fs: f64, eps: f64) -> Result<Option<f64>> {
        steady_state_detect(&self.times_fs, &self.abs_coherence, window_fs, eps)
    }

    /// Half-rise time of the m1 population: first t with
    /// p_m1(t) ≥ ½·p_m1(horizon), linearly interpolated between samples.
    /// NaN when the level is never reached.
    pub fn half_rise_m1(&self) -> f64 {
        let pm1 = &self.populations[3];
        let target = 0.5 * pm1[pm1.len() - 1];
        if pm1[0] >= target {
            return self.times_fs[0];
        }
        for k in 1..pm1.len() {
            if pm1[k] >= target {
                let (t0, t1) = (self.times_fs[k - 1], self.times_fs[k]);
                let (p0, p1) = (pm1[k - 1], pm1[k]);
                if p1 > p0 {
                    return t0 + (target - p0) / (p1 - p0) * (t1 - t0);
                }
                return t1;
            }
        }
        f64::NAN
    }

    /// Mean |ρ_{e1e2}| over [t0, t0 + window].
    pub fn mean_abs_coherence(&self, t0: f64, window_fs: f64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (&t, &c) in self.times_fs.iter().zip(self.abs_coherence.iter()) {
            if t >= t0 - 1e-9 && t <= t0 + window_fs + 1e-9 {
                sum += c;
                count += 1;
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }
}

/// Comparison of a non-Markovian run against its Markovian counterpart on
/// the identical time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub times_fs: Vec<f64>,
    pub abs_c_nonmarkovian: Vec<f64>,
    pub abs_c_markovian: Vec<f64>,
    /// Pointwise |ρ^NM|/|ρ^M|.
    pub coherence_ratio: Vec<f64>,
    pub t_half_nonmarkovian_fs: f64,
    pub t_half_markovian_fs: f64,
    /// Steady coherence: the mean of |ρ_{e1e2}| over the detected steady
    /// window of the non-Markovian run (falling back to the final window),
    /// evaluated on both trajectories over the same interval.
    pub steady_abs_c_nonmarkovian: f64,
    pub steady_abs_c_markovian: f64,
    pub steady_onset_fs: Option<f64>,
    /// |ρ^NM|(t) ≥ |ρ^M|(t) − 1e-6 at every sample.
    pub claim_coherence_enhanced: bool,
    /// t½(p_m1) strictly larger in the non-Markovian run.
    pub claim_slower_buildup: bool,
}

/// Window and flatness threshold used for the steady-coherence summary.
pub const STEADY_WINDOW_FS: f64 = 300.0;
pub const STEADY_EPS: f64 = 0.02;
/// Slack for the pointwise coherence-enhancement claim.
pub const ENHANCEMENT_SLACK: f64 = 1e-6;

/// Build the comparison report. The grids must be identical.
pub fn compare(nm: &TrajectoryRecord, m: &TrajectoryRecord) -> Result<ComparisonReport> {
    if nm.times_fs != m.times_fs {
        return Err(Error::Mismatch(format!(
            "time grids differ ({} vs {} samples)",
            nm.len(),
            m.len()
        )));
    }
    if nm.is_empty() {
        return Err(Error::Mismatch("empty trajectories".into()));
    }
    let ratio: Vec<f64> = nm
        .abs_coherence
        .iter()
        .zip(m.abs_coherence.iter())
        .map(|(&a, &b)| a / b)
        .collect();
    let claim_coherence_enhanced = nm
        .abs_coherence
        .iter()
        .zip(m.abs_coherence.iter())
        .all(|(&a, &b)| a >= b - ENHANCEMENT_SLACK);
    let t_half_nm = nm.half_rise_m1();
    let t_half_m = m.half_rise_m1();
    let span = nm.times_fs[nm.len() - 1] - nm.times_fs[0];
    let steady_onset = if span >= 2.0 * STEADY_WINDOW_FS {
        nm.steady_state(STEADY_WINDOW_FS, STEADY_EPS)?
    } else {
        None
    };
    let window_start = steady_onset
        .unwrap_or_else(|| (nm.times_fs[nm.len() - 1] - STEADY_WINDOW_FS).max(nm.times_fs[0]));
    Ok(ComparisonReport {
        times_fs: nm.times_fs.clone(),
        abs_c_nonmarkovian: nm.abs_coherence.clone(),
        abs_c_markovian: m.abs_coherence.clone(),
        coherence_ratio: ratio,
        t_half_nonmarkovian_fs: t_half_nm,
        t_half_markovian_fs: t_half_m,
        steady_abs_c_nonmarkovian: nm.mean_abs_coherence(window_start, STEADY_WINDOW_FS),
        steady_abs_c_markovian: m.mean_abs_coherence(window_start, STEADY_WINDOW_FS),
        steady_onset_fs: steady_onset,
        claim_coherence_enhanced,
        claim_slower_buildup: t_half_nm > t_half_m,
    })
}

// ---------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------

pub const CSV_HEADER: &str = "t_fs,p_g,p_e1,p_e2,p_m1,p_m2,re_c,im_c,abs_c,trace_err,min_eig";

fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render the trajectory CSV (header + one row per sample).
pub fn csv_record_string(rec: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(32 + rec.len() * 240);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..rec.len() {
        let fields = [
            rec.times_fs[k],
            rec.populations[0][k],
            rec.populations[1][k],
            rec.populations[2][k],
            rec.populations[3][k],
            rec.populations[4][k],
            rec.re_coherence[k],
            rec.im_coherence[k],
            rec.abs_coherence[k],
            rec.trace_error[k],
            rec.min_eigenvalue[k],
        ];
        let row: Vec<String> = fields.iter().map(|&v| csv_float(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Write the trajectory CSV atomically.
pub fn write_csv(rec: &TrajectoryRecord, path: &Path) -> Result<()> {
    write_atomic(path, csv_record_string(rec).as_bytes())
}

/// Parse a trajectory CSV produced by [`write_csv`]. Round-trips
/// bit-exactly through the 17-significant-digit float format.
pub fn parse_csv(text: &str) -> Result<TrajectoryRecord> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Mismatch("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Mismatch(format!(
            "unexpected CSV header: '{header}'"
        )));
    }
    let mut rec = TrajectoryRecord {
        times_fs: vec![],
        populations: Default::default(),
        re_coherence: vec![],
        im_coherence: vec![],
        abs_coherence: vec![],
        trace_error: vec![],
        min_eigenvalue: vec![],
        herm_drift: vec![],
    };
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Mismatch(format!("row {}: bad float '{s}'", n + 2)))
            })
            .collect::<Result<_>>()?;
        if fields.len() != 11 {
            return Err(Error::Mismatch(format!(
                "row {}: expected 11 columns, found {}",
                n + 2,
                fields.len()
            )));
        }
        rec.times_fs.push(fields[0]);
        for i in 0..DIM {
            rec.populations[i].push(fields[1 + i]);
        }
        rec.re_coherence.push(fields[6]);
        rec.im_coherence.push(fields[7]);
        rec.abs_coherence.push(fields[8]);
        rec.trace_error.push(fields[9]);
        rec.min_eigenvalue.push(fields[10]);
        rec.herm_drift.push(0.0);
    }
    Ok(rec)
}

pub const REPORT_HEADER: &str = "t_fs,abs_c_nonmarkovian,abs_c_markovian,coherence_ratio";

/// Pointwise comparison CSV.
pub fn csv_report_string(report: &ComparisonReport) -> String {
    let mut out = String::with_capacity(32 + report.times_fs.len() * 100);
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for k in 0..report.times_fs.len() {
        let row = [
            report.times_fs[k],
            report.abs_c_nonmarkovian[k],
            report.abs_c_markovian[k],
            report.coherence_ratio[k],
        ];
        let cells: Vec<String> = row.iter().map(|&v| csv_float(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Scalar verdicts of a comparison as a metric,value CSV.
pub fn csv_summary_string(report: &ComparisonReport) -> String {
    let mut out = String::from("metric,value\n");
    out.push_str(&format!(
        "t_half_nonmarkovian_fs,{}\n",
        csv_float(report.t_half_nonmarkovian_fs)
    ));
    out.push_str(&format!(
        "t_half_markovian_fs,{}\n",
        csv_float(report.t_half_markovian_fs)
    ));
    out.push_str(&format!(
        "steady_onset_fs,{}\n",
        report
            .steady_onset_fs
            .map(csv_float)
            .unwrap_or_else(|| "none".into())
    ));
    out.push_str(&format!(
        "steady_abs_c_nonmarkovian,{}\n",
        csv_float(report.steady_abs_c_nonmarkovian)
    ));
    out.push_str(&format!(
        "steady_abs_c_markovian,{}\n",
        csv_float(report.steady_abs_c_markovian)
    ));
    out.push_str(&format!(
        "claim_coherence_enhanced,{}\n",
        report.claim_coherence_enhanced
    ));
    out.push_str(&format!(
        "claim_slower_buildup,{}\n",
        report.claim_slower_buildup
    ));
    out
}

pub fn write_report_csv(report: &ComparisonReport, path: &Path) -> Result<()> {
    write_atomic(path, csv_report_string(report).as_bytes())
}

pub fn write_summary_csv(report: &ComparisonReport, path: &Path) -> Result<()> {
    write_atomic(path, csv_summary_string(report).as_bytes())
}

// ---------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------

/// One plotted channel: a name and a y-series over the shared time axis.
pub struct Channel<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

const SVG_W: f64 = 960.0;
const SVG_H: f64 = 600.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn svg_num(v: f64) -> String {
    // fixed notation keeps coordinates deterministic and viewer-friendly
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render time-series channels as a standalone SVG line plot: one polyline
/// per channel, labeled axes, legend from channel names. Deterministic for
/// fixed input.
pub fn svg_lines_string(times_fs: &[f64], channels: &[Channel<'_>]) -> Result<String> {
    if channels.is_empty() {
        return Err(Error::Mismatch("no channels to plot".into()));
    }
    if times_fs.is_empty() {
        return Err(Error::Mismatch("empty record".into()));
    }
    for ch in channels {
        if ch.values.len() != times_fs.len() {
            return Err(Error::Mismatch(format!(
                "channel '{}' length {} does not match time axis {}",
                ch.name,
                ch.values.len(),
                times_fs.len()
            )));
        }
    }
    let (tmin, tmax) = (times_fs[0], times_fs[times_fs.len() - 1]);
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for ch in channels {
        for &v in ch.values {
            ymin = ymin.min(v);
            ymax = ymax.max(v);
        }
    }
    if !(ymin.is_finite() && ymax.is_finite()) {
        return Err(Error::Mismatch("non-finite values in plot data".into()));
    }
    if ymax - ymin < 1e-300 {
        // constant channels still get a visible band
        let pad = ymax.abs().max(1.0) * 0.05;
        ymin -= pad;
        ymax += pad;
    }
    let tspan = (tmax - tmin).max(1e-300);
    let x = |t: f64| MARGIN_L + (t - tmin) / tspan * (SVG_W - MARGIN_L - MARGIN_R);
    let y = |v: f64| SVG_H - MARGIN_B - (v - ymin) / (ymax - ymin) * (SVG_H - MARGIN_T - MARGIN_B);

    let mut s = String::new();
    s.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        svg_num(MARGIN_L),
        svg_num(SVG_H - MARGIN_B),
        svg_num(SVG_W - MARGIN_R),
        svg_num(SVG_H - MARGIN_B)
    ));
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        svg_num(MARGIN_L),
        svg_num(MARGIN_T),
        svg_num(MARGIN_L),
        svg_num(SVG_H - MARGIN_B)
    ));

    // ticks and labels
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let tv = tmin + f * (tmax - tmin);
        let xv = x(tv);
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            svg_num(xv),
            svg_num(SVG_H - MARGIN_B),
            svg_num(SVG_H - MARGIN_B + 5.0)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            svg_num(xv),
            svg_num(SVG_H - MARGIN_B + 20.0),
            svg_num(tv)
        ));
        let vv = ymin + f * (ymax - ymin);
        let yv = y(vv);
        s.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            svg_num(yv),
            svg_num(MARGIN_L - 5.0),
            svg_num(MARGIN_L)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{:.4e}</text>\n",
            svg_num(MARGIN_L - 8.0),
            svg_num(yv + 4.0),
            vv
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">t (fs)</text>\n",
        svg_num((MARGIN_L + SVG_W - MARGIN_R) / 2.0),
        svg_num(SVG_H - 10.0)
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">value</text>\n",
        svg_num((MARGIN_T + SVG_H - MARGIN_B) / 2.0),
        svg_num((MARGIN_T + SVG_H - MARGIN_B) / 2.0)
    ));

    // polylines
    for (i, ch) in channels.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::with_capacity(ch.values.len() * 14);
        for (&t, &v) in times_fs.iter().zip(ch.values.iter()) {
            points.push_str(&format!("{},{} ", svg_num(x(t)), svg_num(y(v))));
        }
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.trim_end()
        ));
    }

    // legend
    for (i, ch) in channels.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = MARGIN_T + 16.0 * i as f64 + 8.0;
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            svg_num(SVG_W - MARGIN_R - 160.0),
            svg_num(ly),
            svg_num(SVG_W - MARGIN_R - 130.0),
            svg_num(ly)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            svg_num(SVG_W - MARGIN_R - 124.0),
            svg_num(ly + 4.0),
            escape_xml(ch.name)
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Write an SVG line plot atomically.
pub fn write_svg_lines(times_fs: &[f64], channels: &[Channel<'_>], path: &Path) -> Result<()> {
    let doc = svg_lines_string(times_fs, channels)?;
    write_atomic(path, doc.as_bytes())
}

/// Write bytes to `path` via a temp file in the same directory plus an
/// atomic rename, so interrupted runs never leave partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let display = path.display().to_string();
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let stem = path
        .file_name()
        .ok_or_else(|| Error::config(format!("not a file path: {display}")))?;
    let tmp = dir.join(format!(".{}.tmp-{}", stem.to_string_lossy(), std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(display, e))
}
