//! Hand-written SVG line charts. Every data series is exactly one `<path>`;
//! grid lines, axes and bands use `<line>`/`<polygon>` so paths can be
//! counted against the `data-series` list on the root element.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::profile::{CorrelogramData, Decomposition, RollingStats};

pub const PRIMARY: &str = "#c83e4b";
const PALETTE: [&str; 6] = ["#2e86ab", "#f18f01", "#3b8b5a", "#6c4f9c", "#8c564b", "#555555"];
const LINE_WIDTH: f64 = 2.0;
const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const GAP: f64 = 44.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round-number tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, f64) {
    let span = (hi - lo).abs().max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    ((start..=end).map(|i| i as f64 * step).collect(), step)
}

fn label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == r.trunc() && r.abs() < 1e9 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

struct Panel {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.x + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Chart under construction.
pub struct Chart {
    body: String,
    series: Vec<String>,
    height: f64,
    title: String,
}

impl Chart {
    fn new(title: &str, panels: usize) -> Self {
        Self {
            body: String::new(),
            series: Vec::new(),
            height: MARGIN_T + panels as f64 * PANEL_H + (panels.saturating_sub(1)) as f64 * GAP + 40.0,
            title: title.to_string(),
        }
    }

    fn panel(&mut self, index: usize, title: &str, xr: (f64, f64), yr: (f64, f64)) -> Panel {
        let p = Panel {
            x: MARGIN_L,
            y: MARGIN_T + index as f64 * (PANEL_H + GAP),
            w: WIDTH - MARGIN_L - MARGIN_R,
            h: PANEL_H,
            xr: if xr.1 > xr.0 { xr } else { (xr.0, xr.0 + 1.0) },
            yr,
        };
        let b = &mut self.body;
        let _ = writeln!(
            b,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#ffffff" stroke="#333333" stroke-width="0.8"/>"##,
            p.x, p.y, p.w, p.h
        );
        let _ = writeln!(b, r#"<text x="{:.2}" y="{:.2}" font-size="12" font-weight="bold">{}</text>"#, p.x, p.y - 6.0, esc(title));
        for (axis_ticks, vertical) in [(ticks(p.yr.0, p.yr.1, 5), false), (ticks(p.xr.0, p.xr.1, 8), true)] {
            let (major, step) = axis_ticks;
            for (i, v) in major.iter().enumerate() {
                let minor = v + step / 2.0;
                let draw = |b: &mut String, v: f64, style: &str| {
                    let (x1, y1, x2, y2) = if vertical {
                        (p.px(v), p.y, p.px(v), p.y + p.h)
                    } else {
                        (p.x, p.py(v), p.x + p.w, p.py(v))
                    };
                    let _ = writeln!(
                        b,
                        r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#b0b0b0" stroke-width="0.6" {style}/>"##
                    );
                };
                draw(b, *v, r#"stroke-opacity="0.5" class="grid-major""#);
                let within = if vertical { minor <= p.xr.1 } else { minor <= p.yr.1 };
                if within || i + 1 < major.len() {
                    draw(b, minor, r#"stroke-opacity="0.3" stroke-dasharray="1,3" class="grid-minor""#);
                }
                if vertical {
                    let _ = writeln!(b, r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#, p.px(*v), p.y + p.h + 14.0, label(*v));
                } else {
                    let _ = writeln!(b, r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#, p.x - 6.0, p.py(*v) + 3.0, label(*v));
                }
            }
        }
        p
    }

    /// One `<path>`; `None` points break the line without a new element.
    fn line(&mut self, p: &Panel, name: &str, color: &str, points: &[(f64, Option<f64>)], dash: bool) {
        let mut d = String::new();
        let mut pen_down = false;
        for (x, y) in points {
            match y {
                Some(y) if y.is_finite() => {
                    let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, p.px(*x), p.py(*y));
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        self.push_path(name, color, d.trim_end(), dash);
    }

    fn push_path(&mut self, name: &str, color: &str, d: &str, dash: bool) {
        let dash = if dash { r#" stroke-dasharray="6,3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<path data-series="{}" d="{}" fill="none" stroke="{color}" stroke-width="{LINE_WIDTH}"{dash}/>"#,
            esc(name),
            if d.is_empty() { "M0,0" } else { d }
        );
        self.series.push(name.to_string());
    }

    fn legend(&mut self, p: &Panel, entries: &[(&str, &str)]) {
        for (i, (name, color)) in entries.iter().enumerate() {
            let x = p.x + p.w - 170.0;
            let y = p.y + 14.0 + 14.0 * i as f64;
            let _ = writeln!(
                self.body,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="{LINE_WIDTH}"/><text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
                x,
                x + 18.0,
                x + 24.0,
                y + 3.0,
                esc(name)
            );
        }
    }

    fn finish(self) -> String {
        format!(
            concat!(
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h:.0}" viewBox="0 0 {w} {h:.0}" data-series="{series}" font-family="sans-serif">"#,
                "\n<title>{title}</title>\n",
                r##"<rect width="100%" height="100%" fill="#ffffff"/>"##,
                "\n{body}</svg>\n"
            ),
            w = WIDTH,
            h = self.height,
            series = esc(&self.series.join(",")),
            title = esc(&self.title),
            body = self.body,
        )
    }
}

fn range_of<'a>(it: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    it.filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

/// Raw values with their trailing rolling mean and standard deviation.
pub fn overview(raw: &[Option<f64>], rolling: &RollingStats) -> String {
    let n = raw.len();
    let mut c = Chart::new("Series overview", 2);
    let observed: Vec<f64> = raw.iter().flatten().copied().collect();
    let (lo, hi) = range_of(observed.iter().chain(&rolling.means));
    let top = c.panel(0, "Series and rolling mean", (0.0, n as f64 - 1.0), padded(lo, hi));
    let pts: Vec<(f64, Option<f64>)> = raw.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect();
    c.line(&top, "raw", PRIMARY, &pts, false);
    let mean_pts: Vec<(f64, Option<f64>)> = rolling
        .means
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + rolling.offset) as f64, Some(*v)))
        .collect();
    c.line(&top, "rolling_mean", PALETTE[0], &mean_pts, false);
    c.legend(&top, &[("raw", PRIMARY), (&format!("rolling mean ({})", rolling.window), PALETTE[0])]);
    let (slo, shi) = range_of(rolling.stds.iter());
    let bottom = c.panel(1, "Rolling standard deviation", (0.0, n as f64 - 1.0), padded(slo.min(0.0), shi));
    let std_pts: Vec<(f64, Option<f64>)> = rolling
        .stds
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + rolling.offset) as f64, Some(*v)))
        .collect();
    c.line(&bottom, "rolling_std", PALETTE[1], &std_pts, false);
    c.finish()
}

/// Four stacked panels: observed, trend, seasonal, residual.
pub fn decomposition(d: &Decomposition) -> String {
    let n = d.observed.len();
    let xr = (0.0, n as f64 - 1.0);
    let mut c = Chart::new(&format!("Additive decomposition (period {})", d.period), 4);
    let comps: [(&str, &str, Vec<Option<f64>>); 4] = [
        ("observed", "Observed", d.observed.iter().map(|v| Some(*v)).collect()),
        ("trend", "Trend", d.trend.clone()),
        ("seasonal", "Seasonal", d.seasonal.iter().map(|v| Some(*v)).collect()),
        ("residual", "Residual", d.residual.clone()),
    ];
    for (i, (name, title, values)) in comps.iter().enumerate() {
        let flat: Vec<f64> = values.iter().flatten().copied().collect();
        let (lo, hi) = range_of(flat.iter());
        let p = c.panel(i, title, xr, padded(lo, hi));
        let pts: Vec<(f64, Option<f64>)> = values.iter().enumerate().map(|(t, v)| (t as f64, *v)).collect();
        c.line(&p, name, if i == 0 { PRIMARY } else { PALETTE[i - 1] }, &pts, false);
    }
    c.finish()
}

/// ACF and PACF stems with the white-noise band.
pub fn correlogram(data: &CorrelogramData) -> String {
    let lags = data.acf.len().saturating_sub(1);
    let mut c = Chart::new(&format!("Correlogram (n = {})", data.n), 2);
    for (i, (name, title, values)) in [("acf", "Autocorrelation", &data.acf), ("pacf", "Partial autocorrelation", &data.pacf)]
        .into_iter()
        .enumerate()
    {
        let (lo, hi) = range_of(values.iter());
        let yr = padded(lo.min(-data.confidence_band), hi.max(data.confidence_band));
        let p = c.panel(i, title, (-0.5, lags as f64 + 0.5), yr);
        for sign in [1.0, -1.0] {
            let y = p.py(sign * data.confidence_band);
            let _ = writeln!(
                c.body,
                r##"<line class="band" data-band="{:.6}" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#2e86ab" stroke-width="1" stroke-dasharray="4,3"/>"##,
                sign * data.confidence_band,
                p.x,
                p.x + p.w
            );
        }
        let zero = p.py(0.0);
        let mut d = String::new();
        for (k, v) in values.iter().enumerate() {
            let _ = write!(d, "M{:.2},{zero:.2} L{:.2},{:.2} ", p.px(k as f64), p.px(k as f64), p.py(*v));
        }
        c.push_path(name, PRIMARY, d.trim_end(), false);
    }
    c.finish()
}

/// Inputs of the ensemble chart, all in original units.
pub struct ForecastPlot<'a> {
    pub history: &'a [f64],
    pub members: &'a [(String, Vec<f64>)],
    pub ensemble: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub level: f64,
    pub actual: Option<&'a [f64]>,
}

/// History tail, member forecasts, ensemble line and interval band.
pub fn ensemble_forecast(f: &ForecastPlot<'_>) -> Result<String> {
    let h = f.ensemble.len();
    if f.lower.len() != h || f.upper.len() != h || f.members.iter().any(|(_, m)| m.len() != h) {
        return Err(Error::Report("forecast plot inputs have unequal lengths".into()));
    }
    let tail = f.history.len().min((3 * h).max(48));
    let hist = &f.history[f.history.len() - tail..];
    let start = -(tail as f64);
    let mut all: Vec<f64> = hist.to_vec();
    all.extend(f.ensemble.iter().chain(f.lower).chain(f.upper));
    for (_, m) in f.members {
        all.extend(m);
    }
    if let Some(a) = f.actual {
        all.extend(a);
    }
    let (lo, hi) = range_of(all.iter());
    let mut c = Chart::new("Ensemble forecast", 1);
    let p = c.panel(0, "History, members and ensemble", (start, h as f64 - 1.0), padded(lo, hi));

    let mut poly = String::new();
    for (t, v) in f.upper.iter().enumerate() {
        let _ = write!(poly, "{:.2},{:.2} ", p.px(t as f64), p.py(*v));
    }
    for (t, v) in f.lower.iter().enumerate().rev() {
        let _ = write!(poly, "{:.2},{:.2} ", p.px(t as f64), p.py(*v));
    }
    let _ = writeln!(
        c.body,
        r#"<polygon class="interval" data-level="{}" points="{}" fill="{PRIMARY}" fill-opacity="0.18" stroke="none"/>"#,
        f.level,
        poly.trim_end()
    );
    let hist_pts: Vec<(f64, Option<f64>)> = hist.iter().enumerate().map(|(i, v)| (start + i as f64, Some(*v))).collect();
    c.line(&p, "history", "#222222", &hist_pts, false);
    let mut legend: Vec<(String, &str)> = vec![("history".into(), "#222222")];
    for (i, (name, m)) in f.members.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, Option<f64>)> = m.iter().enumerate().map(|(t, v)| (t as f64, Some(*v))).collect();
        c.line(&p, name, color, &pts, true);
        legend.push((name.clone(), color));
    }
    if let Some(a) = f.actual {
        let pts: Vec<(f64, Option<f64>)> = a.iter().enumerate().map(|(t, v)| (t as f64, Some(*v))).collect();
        c.line(&p, "actual", "#999999", &pts, false);
        legend.push(("actual".into(), "#999999"));
    }
    let pts: Vec<(f64, Option<f64>)> = f.ensemble.iter().enumerate().map(|(t, v)| (t as f64, Some(*v))).collect();
    c.line(&p, "ensemble", PRIMARY, &pts, false);
    legend.push(("ensemble".into(), PRIMARY));
    let entries: Vec<(&str, &str)> = legend.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    c.legend(&p, &entries);
    Ok(c.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps_are_round() {
        let (t, step) = ticks(0.0, 97.0, 8);
        assert_eq!(step, 20.0);
        assert_eq!(t, vec![0.0, 20.0, 40.0, 60.0, 80.0]);
        assert_eq!(label(0.30000000000000004), "0.3");
    }

    #[test]
    fn gaps_break_one_path() {
        let rolling = RollingStats {
            window: 2,
            offset: 1,
            means: vec![1.5, 2.5],
            stds: vec![0.5, 0.5],
        };
        let svg = overview(&[Some(1.0), Some(2.0), None, Some(3.0)], &rolling);
        assert_eq!(svg.matches("<path").count(), 3);
        assert!(svg.contains(r#"data-series="raw,rolling_mean,rolling_std""#));
        assert!(svg.contains(PRIMARY));
    }
}
