//! Minimal self-contained SVG emission: polylines, filled bands, labeled
//! axes, and a red→blue color ramp indexing time.

use crate::error::{Error, Result};

pub struct SvgPlot {
    width: f64,
    height: f64,
    title: String,
    xlabel: String,
    ylabel: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
    n_series: usize,
}

const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 18.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 48.0;

impl SvgPlot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        SvgPlot {
            width: 640.0,
            height: 440.0,
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            x_range: (f64::MAX, f64::MIN),
            y_range: (f64::MAX, f64::MIN),
            body: String::new(),
            n_series: 0,
        }
    }

    fn expand_range(&mut self, pts: &[(f64, f64)]) {
        for &(x, y) in pts {
            self.x_range.0 = self.x_range.0.min(x);
            self.x_range.1 = self.x_range.1.max(x);
            self.y_range.0 = self.y_range.0.min(y);
            self.y_range.1 = self.y_range.1.max(y);
        }
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) -> Result<()> {
        if pts.is_empty() {
            return Err(Error::invalid("empty polyline"));
        }
        self.expand_range(pts);
        self.body.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" points=\"PTS{}\"/>\n",
            encode_points(pts)
        ));
        self.n_series += 1;
        Ok(())
    }

    /// Filled region between lower and upper curves sharing x positions.
    pub fn band(&mut self, x: &[f64], lo: &[f64], hi: &[f64], color: &str) -> Result<()> {
        if x.is_empty() || x.len() != lo.len() || x.len() != hi.len() {
            return Err(Error::invalid("band inputs empty or mismatched"));
        }
        let mut pts: Vec<(f64, f64)> = x.iter().cloned().zip(lo.iter().cloned()).collect();
        pts.extend(x.iter().rev().cloned().zip(hi.iter().rev().cloned()));
        self.expand_range(&pts);
        self.body.push_str(&format!(
            "<polygon fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"none\" points=\"PTS{}\"/>\n",
            encode_points(&pts)
        ));
        self.n_series += 1;
        Ok(())
    }

    pub fn render(&self) -> Result<String> {
        if self.n_series == 0 {
            return Err(Error::invalid("nothing to plot"));
        }
        let (x0, x1) = pad_range(self.x_range);
        let (y0, y1) = pad_range(self.y_range);
        let pw = self.width - MARGIN_L - MARGIN_R;
        let ph = self.height - MARGIN_T - MARGIN_B;
        let sx = move |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let sy = move |y: f64| MARGIN_T + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            w = self.width,
            h = self.height
        );
        out.push_str(&format!(
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
            self.width / 2.0,
            xml_escape(&self.title)
        ));
        // axes
        out.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
             <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
            l = MARGIN_L,
            r = self.width - MARGIN_R,
            t = MARGIN_T,
            b = self.height - MARGIN_B
        ));
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
                sx(fx),
                self.height - MARGIN_B + 16.0,
                fmt_tick(fx)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
                MARGIN_L - 6.0,
                sy(fy) + 3.0,
                fmt_tick(fy)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            MARGIN_L + pw / 2.0,
            self.height - 12.0,
            xml_escape(&self.xlabel)
        ));
        out.push_str(&format!(
            "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>\n",
            MARGIN_T + ph / 2.0,
            MARGIN_T + ph / 2.0,
            xml_escape(&self.ylabel)
        ));

        // project recorded data coordinates into pixel space
        let mut projected = String::with_capacity(self.body.len());
        for line in self.body.lines() {
            if let Some(start) = line.find("points=\"PTS") {
                let (head, rest) = line.split_at(start + "points=\"".len());
                let coords_end = rest.find('"').unwrap();
                let coords = &rest["PTS".len()..coords_end];
                let tail = &rest[coords_end..];
                let mut px = String::new();
                for pair in coords.split(' ') {
                    if pair.is_empty() {
                        continue;
                    }
                    let mut it = pair.split(',');
                    let x: f64 = it.next().unwrap().parse().unwrap();
                    let y: f64 = it.next().unwrap().parse().unwrap();
                    px.push_str(&format!("{:.2},{:.2} ", sx(x), sy(y)));
                }
                projected.push_str(head);
                projected.push_str(px.trim_end());
                projected.push_str(tail);
                projected.push('\n');
            } else {
                projected.push_str(line);
                projected.push('\n');
            }
        }
        out.push_str(&projected);
        out.push_str("</svg>\n");
        Ok(out)
    }
}

/// Red→blue ramp over series index (early time red, late blue).
pub fn time_ramp(index: usize, count: usize) -> String {
    let f = if count <= 1 {
        0.0
    } else {
        index as f64 / (count - 1) as f64
    };
    let r = (214.0 + (43.0 - 214.0) * f) as u8;
    let g = (45.0 + (98.0 - 45.0) * f) as u8;
    let b = (38.0 + (186.0 - 38.0) * f) as u8;
    format!("rgb({r},{g},{b})")
}

fn encode_points(pts: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for &(x, y) in pts {
        s.push_str(&format!("{x},{y} "));
    }
    s.trim_end().to_string()
}

fn pad_range((lo, hi): (f64, f64)) -> (f64, f64) {
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
