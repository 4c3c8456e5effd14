//! CSV tables and SVG decay plots.
//!
//! Every file starts with a `# config_sha256=…` comment naming the run;
//! readers skip comment lines.  Floats are written in Rust's shortest
//! round-trip form, so parsing a written table gives back the same values.

use std::fmt::Write as _;

use viana_core::stats::{fit_fixed_exponent, EnvelopeFit, StretchedExpFit, TailCurve, TailKind};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("expected header '{expected}', found '{found}'")]
    Header { expected: String, found: String },
}

pub fn hash_comment(hash: &str) -> String {
    format!("# config_sha256={hash}\n")
}

/// Header and data rows of a comma-separated table, with 1-based line
/// numbers for error messages.
fn parse_table<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>, CsvError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let found = lines.next().map(|(_, l)| l).unwrap_or("");
    if found != header {
        return Err(CsvError::Header {
            expected: header.into(),
            found: found.into(),
        });
    }
    let width = header.split(',').count();
    lines
        .map(|(line, l)| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != width {
                return Err(CsvError::Malformed {
                    line,
                    message: format!("{} fields, expected {width}", cells.len()),
                });
            }
            Ok((line, cells))
        })
        .collect()
}

fn field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, CsvError> {
    s.parse().map_err(|_| CsvError::Malformed {
        line,
        message: format!("cannot parse '{s}'"),
    })
}

pub const TAILS_HEADER: &str = "kind,n,p,count,ensemble_size";

/// One tail curve as stored in `tails.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSeries {
    pub kind: TailKind,
    pub n: Vec<u64>,
    pub p: Vec<f64>,
    pub count: Vec<u64>,
    pub ensemble_size: usize,
}

impl From<&TailCurve> for TailSeries {
    fn from(c: &TailCurve) -> Self {
        Self {
            kind: c.kind,
            n: c.n_values.clone(),
            p: c.p_values.clone(),
            count: c.counts.clone(),
            ensemble_size: c.ensemble_size,
        }
    }
}

impl TailSeries {
    pub fn n_f64(&self) -> Vec<f64> {
        self.n.iter().map(|&n| n as f64).collect()
    }
}

pub fn write_tails_csv(series: &[TailSeries], hash: &str) -> String {
    let mut s = hash_comment(hash);
    s.push_str(TAILS_HEADER);
    s.push('\n');
    for t in series {
        for i in 0..t.n.len() {
            let _ = writeln!(s, "{},{},{},{},{}", t.kind.as_str(), t.n[i], t.p[i], t.count[i], t.ensemble_size);
        }
    }
    s
}

pub fn parse_tails_csv(text: &str) -> Result<Vec<TailSeries>, CsvError> {
    let mut out: Vec<TailSeries> = Vec::new();
    for (line, cells) in parse_table(text, TAILS_HEADER)? {
        let kind = TailKind::parse(cells[0]).ok_or_else(|| CsvError::Malformed {
            line,
            message: format!("unknown kind '{}'", cells[0]),
        })?;
        let ensemble_size = field(line, cells[4])?;
        let idx = match out.iter().position(|t| t.kind == kind) {
            Some(i) => i,
            None => {
                out.push(TailSeries {
                    kind,
                    n: Vec::new(),
                    p: Vec::new(),
                    count: Vec::new(),
                    ensemble_size,
                });
                out.len() - 1
            }
        };
        let t = &mut out[idx];
        t.n.push(field(line, cells[1])?);
        t.p.push(field(line, cells[2])?);
        t.count.push(field(line, cells[3])?);
    }
    Ok(out)
}

/// Rows `(n, value, stderr)` of `correlation.csv` / `ld.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series3 {
    pub n: Vec<u64>,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

pub const CORRELATION_HEADER: &str = "n,corr,stderr";
pub const LD_HEADER: &str = "n,ld,stderr";
pub const DENSITY_HEADER: &str = "cell_left,cell_right,value";

pub fn write_series3(series: &Series3, header: &str, hash: &str) -> String {
    let mut s = hash_comment(hash);
    s.push_str(header);
    s.push('\n');
    for i in 0..series.n.len() {
        let _ = writeln!(s, "{},{},{}", series.n[i], series.value[i], series.stderr[i]);
    }
    s
}

pub fn parse_series3(text: &str, header: &str) -> Result<Series3, CsvError> {
    let mut out = Series3 {
        n: Vec::new(),
        value: Vec::new(),
        stderr: Vec::new(),
    };
    for (line, cells) in parse_table(text, header)? {
        out.n.push(field(line, cells[0])?);
        out.value.push(field(line, cells[1])?);
        out.stderr.push(field(line, cells[2])?);
    }
    Ok(out)
}

/// Free-form table with a fixed header; rows are already formatted.
pub fn write_rows(header: &str, rows: impl IntoIterator<Item = String>, hash: &str) -> String {
    let mut s = hash_comment(hash);
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// `key=value` lines.
pub fn write_summary(pairs: &[(String, String)], hash: &str) -> String {
    let mut s = format!("config_sha256={hash}\n");
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
}

/// Linear `x`, base-10 logarithmic `y`, fixed viewbox.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    /// Decades `(lo, hi)` of the `y` axis.
    pub y_decades: (i32, i32),
}

pub const PLOT_WIDTH: f64 = 720.0;
pub const PLOT_HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

impl LogPlot {
    pub fn fitting(title: &str, x_label: &str, y_label: &str, series: &[PlotSeries]) -> Self {
        let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.1 > 0.0 && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.1, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        let lo = y0.log10().floor() as i32;
        let hi = (y1.log10().ceil() as i32).max(lo + 1);
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_range: (x0, x1),
            y_decades: (lo, hi),
        }
    }

    /// Pixel coordinates of a data point.
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let w = PLOT_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let h = PLOT_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = MARGIN_LEFT + w * (x - self.x_range.0) / (self.x_range.1 - self.x_range.0);
        let (lo, hi) = (self.y_decades.0 as f64, self.y_decades.1 as f64);
        let py = MARGIN_TOP + h * (hi - y.log10()) / (hi - lo);
        (px, py)
    }

    pub fn render(&self, series: &[PlotSeries], hash: &str) -> String {
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {PLOT_WIDTH} {PLOT_HEIGHT}\" width=\"{PLOT_WIDTH}\" height=\"{PLOT_HEIGHT}\">\n\
             <!-- config_sha256={hash} -->\n\
             <!-- x_range={}:{} y_decades={}:{} -->\n\
             <rect width=\"{PLOT_WIDTH}\" height=\"{PLOT_HEIGHT}\" fill=\"white\"/>\n",
            self.x_range.0, self.x_range.1, self.y_decades.0, self.y_decades.1
        );
        let (x0, y0) = (MARGIN_LEFT, PLOT_HEIGHT - MARGIN_BOTTOM);
        let (x1, y1) = (PLOT_WIDTH - MARGIN_RIGHT, MARGIN_TOP);
        let _ = writeln!(
            s,
            "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            x1 - x0,
            y0 - y1
        );
        for d in self.y_decades.0..=self.y_decades.1 {
            let (_, py) = self.map(self.x_range.0, 10f64.powi(d));
            let _ = writeln!(
                s,
                "<line x1=\"{x0}\" y1=\"{py:.3}\" x2=\"{x1}\" y2=\"{py:.3}\" stroke=\"#ddd\"/>\n\
                 <text x=\"{}\" y=\"{:.3}\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>",
                x0 - 6.0,
                py + 4.0
            );
        }
        for i in 0..=4 {
            let x = self.x_range.0 + (self.x_range.1 - self.x_range.0) * i as f64 / 4.0;
            let (px, _) = self.map(x, 1.0);
            let _ = writeln!(
                s,
                "<text x=\"{px:.3}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
                y0 + 18.0,
                format_tick(x)
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
            (x0 + x1) / 2.0,
            escape(&self.title),
            (x0 + x1) / 2.0,
            PLOT_HEIGHT - 16.0,
            escape(&self.x_label),
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        let (floor, ceil) = (10f64.powi(self.y_decades.0), 10f64.powi(self.y_decades.1));
        for (k, series) in series.iter().enumerate() {
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.1 >= floor && p.1 <= ceil)
                .map(|&(x, y)| {
                    let (px, py) = self.map(x, y);
                    format!("{px:.3},{py:.3}")
                })
                .collect();
            let dash = if series.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            let _ = writeln!(
                s,
                "<polyline id=\"series-{k}\" data-name=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
                escape(&series.name),
                series.color,
                pts.join(" ")
            );
            let ly = MARGIN_TOP + 10.0 + 18.0 * k as f64;
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\"{dash}/>\n\
                 <text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>",
                x1 + 10.0,
                x1 + 34.0,
                series.color,
                x1 + 40.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn format_tick(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Envelopes drawn next to a decay curve: the free stretched-exponential
/// fit (when it exists) and the fixed-exponent fits for `ζ = 1/3` and
/// `ζ = 1/7`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    pub fit: Option<StretchedExpFit>,
    pub third: Option<EnvelopeFit>,
    pub seventh: Option<EnvelopeFit>,
}

impl Envelopes {
    pub fn compute(ns: &[f64], ps: &[f64], fit: Option<StretchedExpFit>) -> Self {
        Self {
            fit,
            third: fit_fixed_exponent(ns, ps, 1.0 / 3.0).ok(),
            seventh: fit_fixed_exponent(ns, ps, 1.0 / 7.0).ok(),
        }
    }

    pub fn series(&self, ns: &[f64], start: usize) -> Vec<PlotSeries> {
        let mut out = Vec::new();
        let mut k = start;
        let mut push = |name: String, f: &dyn Fn(f64) -> f64| {
            out.push(PlotSeries {
                name,
                points: ns.iter().map(|&n| (n, f(n))).collect(),
                color: color(k),
                dashed: true,
            });
            k += 1;
        };
        if let Some(f) = &self.fit {
            push(format!("fit zeta={:.3}", f.zeta_hat), &|n| f.eval(n));
        }
        if let Some(e) = &self.third {
            push(format!("C e^(-{:.3} n^(1/3))", e.tau), &|n| e.eval(n));
        }
        if let Some(e) = &self.seventh {
            push(format!("C e^(-{:.3} n^(1/7))", e.tau), &|n| e.eval(n));
        }
        out
    }

    pub const CSV_HEADER: &'static str = "n,fit,zeta_1_3,zeta_1_7";

    pub fn csv(&self, ns: &[f64], hash: &str) -> String {
        let val = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        write_rows(
            Self::CSV_HEADER,
            ns.iter().map(|&n| {
                format!(
                    "{},{},{},{}",
                    n,
                    val(self.fit.as_ref().map(|f| f.eval(n))),
                    val(self.third.map(|e| e.eval(n))),
                    val(self.seventh.map(|e| e.eval(n)))
                )
            }),
            hash,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails_round_trip() {
        let series = vec![
            TailSeries {
                kind: TailKind::Joint,
                n: vec![0, 5, 10],
                p: vec![1.0, 0.123456789012345, 1e-7],
                count: vec![1000, 123, 0],
                ensemble_size: 1000,
            },
            TailSeries {
                kind: TailKind::Expansion,
                n: vec![0, 5, 10],
                p: vec![1.0, 0.1 + 0.2, 0.0],
                count: vec![1000, 300, 0],
                ensemble_size: 1000,
            },
        ];
        let text = write_tails_csv(&series, "abc");
        assert!(text.starts_with("# config_sha256=abc\nkind,n,p,count,ensemble_size\n"));
        assert_eq!(parse_tails_csv(&text).unwrap(), series);
    }

    #[test]
    fn series_round_trip_and_header_check() {
        let s = Series3 {
            n: vec![1, 2],
            value: vec![0.5, 1.0 / 3.0],
            stderr: vec![1e-3, f64::MIN_POSITIVE],
        };
        let text = write_series3(&s, CORRELATION_HEADER, "h");
        assert_eq!(parse_series3(&text, CORRELATION_HEADER).unwrap(), s);
        assert!(parse_series3(&text, LD_HEADER).is_err());
    }

    #[test]
    fn map_is_affine_in_log_space() {
        let plot = LogPlot::fitting("t", "n", "p", &[PlotSeries {
            name: "a".into(),
            points: vec![(0.0, 1.0), (100.0, 1e-3)],
            color: "black",
            dashed: false,
        }]);
        assert_eq!(plot.y_decades, (-3, 0));
        let (_, top) = plot.map(0.0, 1.0);
        let (_, bottom) = plot.map(0.0, 1e-3);
        assert!((top - MARGIN_TOP).abs() < 1e-9);
        assert!((bottom - (PLOT_HEIGHT - MARGIN_BOTTOM)).abs() < 1e-9);
    }
}
