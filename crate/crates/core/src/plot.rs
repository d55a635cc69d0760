//! Minimal standalone SVG charts, each with a CSV of the plotted numbers.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#000000", "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    /// Right-continuous steps, as for an empirical CDF.
    Step,
    Scatter,
}

/// One named series; non-finite `y` values are gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub style: Style,
    pub traces: Vec<Trace>,
    /// Draw the line y = x.
    pub diagonal: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// Padded data range; a degenerate range is widened to unit length.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        x1 - x0,
        y1 - y0
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            f.px(xv),
            y1 + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            x0 - 6.0,
            f.py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, l) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<rect x=\"{x}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"{}\" y=\"{:.1}\">{}</text>",
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(l)
        );
    }
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let pts = || self.traces.iter().flat_map(|t| t.points.iter());
        let mut frame = Frame {
            x: range(pts().map(|p| p.0)),
            y: range(pts().map(|p| p.1)),
        };
        if self.diagonal {
            let lo = frame.x.0.min(frame.y.0);
            let hi = frame.x.1.max(frame.y.1);
            frame = Frame {
                x: (lo, hi),
                y: (lo, hi),
            };
        }
        let mut out = String::new();
        header(&mut out, &self.title);
        axes(&mut out, &frame, &self.x_label, &self.y_label);
        if self.diagonal {
            let (a, b) = frame.x;
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>",
                frame.px(a),
                frame.py(a),
                frame.px(b),
                frame.py(b)
            );
        }
        for (i, t) in self.traces.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            match self.style {
                Style::Scatter => {
                    for &(x, y) in t
                        .points
                        .iter()
                        .filter(|p| p.0.is_finite() && p.1.is_finite())
                    {
                        let _ = writeln!(
                            out,
                            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{colour}\"/>",
                            frame.px(x),
                            frame.py(y)
                        );
                    }
                }
                Style::Line | Style::Step => {
                    for seg in t.points.split(|p| !(p.0.is_finite() && p.1.is_finite())) {
                        if seg.is_empty() {
                            continue;
                        }
                        let mut d = String::new();
                        for (k, &(x, y)) in seg.iter().enumerate() {
                            let cmd = if k == 0 { 'M' } else { 'L' };
                            if self.style == Style::Step && k > 0 {
                                let _ =
                                    write!(d, "L{:.2},{:.2} ", frame.px(x), frame.py(seg[k - 1].1));
                            }
                            let _ = write!(d, "{cmd}{:.2},{:.2} ", frame.px(x), frame.py(y));
                        }
                        let _ = writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>", d.trim_end());
                        if seg.len() == 1 {
                            let (x, y) = seg[0];
                            let _ = writeln!(
                                out,
                                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{colour}\"/>",
                                frame.px(x),
                                frame.py(y)
                            );
                        }
                    }
                }
            }
        }
        let labels: Vec<&str> = self.traces.iter().map(|t| t.label.as_str()).collect();
        legend(&mut out, &labels);
        out.push_str("</svg>\n");
        out
    }

    /// `series,x,y`, one row per plotted point; gaps have an empty `y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,x,y\n");
        for t in &self.traces {
            let label = csv_field(&t.label);
            for &(x, y) in &t.points {
                let _ = writeln!(out, "{label},{},{}", num(x), num(y));
            }
        }
        out
    }
}

/// Grouped bars: one group per category, one bar per series.
#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub categories: Vec<String>,
    /// Per series, one value per category; `None` leaves a gap.
    pub series: Vec<(String, Vec<Option<f64>>)>,
}

impl BarChart {
    pub fn to_svg(&self) -> String {
        let values = self
            .series
            .iter()
            .flat_map(|(_, v)| v.iter().flatten().copied());
        let (lo, hi) = range(values.chain([0.0]));
        let frame = Frame {
            x: (0.0, self.categories.len().max(1) as f64),
            y: (lo.min(0.0), hi),
        };
        let mut out = String::new();
        header(&mut out, &self.title);
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(out, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>", x1 - x0, y1 - y0);
        for k in 0..=4 {
            let yv = frame.y.0 + k as f64 / 4.0 * (frame.y.1 - frame.y.0);
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
                x0 - 6.0,
                frame.py(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        let n = self.series.len().max(1) as f64;
        let zero = frame.py(0.0);
        for (c, cat) in self.categories.iter().enumerate() {
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                frame.px(c as f64 + 0.5),
                y1 + 16.0,
                escape(cat)
            );
            for (s, (_, vals)) in self.series.iter().enumerate() {
                let Some(v) = vals.get(c).copied().flatten().filter(|v| v.is_finite()) else {
                    continue;
                };
                let w = 0.8 / n;
                let left = frame.px(c as f64 + 0.1 + w * s as f64);
                let width = frame.px(c as f64 + 0.1 + w * (s as f64 + 1.0)) - left;
                let top = frame.py(v).min(zero);
                let height = (frame.py(v) - zero).abs();
                let _ = writeln!(
                    out,
                    "<rect x=\"{left:.2}\" y=\"{top:.2}\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"{}\"/>",
                    PALETTE[s % PALETTE.len()]
                );
            }
        }
        let labels: Vec<&str> = self.series.iter().map(|(l, _)| l.as_str()).collect();
        legend(&mut out, &labels);
        out.push_str("</svg>\n");
        out
    }

    /// `series,category,value`; gaps have an empty value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,category,value\n");
        for (label, vals) in &self.series {
            for (c, cat) in self.categories.iter().enumerate() {
                let v = vals.get(c).copied().flatten().map(num).unwrap_or_default();
                let _ = writeln!(out, "{},{},{v}", csv_field(label), csv_field(cat));
            }
        }
        out
    }
}

/// Empirical CDF step points of a sample: `(x, F(x))` at each distinct value.
pub fn ecdf_points(sample: &[f64]) -> Vec<(f64, f64)> {
    let mut s: Vec<f64> = sample.iter().copied().filter(|v| v.is_finite()).collect();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in s.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(style: Style) -> Chart {
        Chart {
            title: "t<1>".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            style,
            traces: vec![
                Trace {
                    label: "a".into(),
                    points: vec![(1.0, 2.0), (2.0, f64::NAN), (3.0, 1.0)],
                },
                Trace {
                    label: "b,c".into(),
                    points: vec![(1.0, 1.0)],
                },
            ],
            diagonal: false,
        }
    }

    #[test]
    fn gaps_split_paths() {
        let svg = chart(Style::Line).to_svg();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("t&lt;1&gt;"));
        assert_eq!(svg.matches("<path").count(), 3);
    }

    #[test]
    fn csv_has_every_point() {
        let csv = chart(Style::Scatter).to_csv();
        assert_eq!(csv, "series,x,y\na,1,2\na,2,\na,3,1\n\"b,c\",1,1\n");
        assert_eq!(chart(Style::Scatter).to_svg().matches("<circle").count(), 3);
    }

    #[test]
    fn ecdf() {
        assert_eq!(
            ecdf_points(&[3.0, 1.0, 1.0, 2.0]),
            vec![(1.0, 0.5), (2.0, 0.75), (3.0, 1.0)]
        );
    }

    #[test]
    fn bars() {
        let b = BarChart {
            title: "d".into(),
            y_label: "score".into(),
            categories: vec!["POD".into(), "FAR".into()],
            series: vec![
                ("raw".into(), vec![Some(0.9), None]),
                ("mc".into(), vec![Some(0.8), Some(0.1)]),
            ],
        };
        assert_eq!(b.to_svg().matches("<rect x=").count(), 1 + 3 + 2);
        assert_eq!(
            b.to_csv(),
            "series,category,value\nraw,POD,0.9\nraw,FAR,\nmc,POD,0.8\nmc,FAR,0.1\n"
        );
    }
}
