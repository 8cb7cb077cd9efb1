use std::fmt::Write as _;

use crate::tv_vecm::IntegrationSpeedPath;

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const GAP: f64 = 60.0;

struct Panel {
    top: f64,
    lo: f64,
    hi: f64,
    len: usize,
}

impl Panel {
    fn new(top: f64, series: &[&[f64]], len: usize) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in series {
            for v in s.iter().filter(|v| v.is_finite()) {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Panel { top, lo: lo - pad, hi: hi + pad, len }
    }

    fn x(&self, i: usize) -> f64 {
        let span = (self.len.max(2) - 1) as f64;
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) * i as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        self.top + PANEL_HEIGHT * (self.hi - v) / (self.hi - self.lo)
    }

    fn polyline(&self, out: &mut String, values: &[f64], offset: usize, style: &str) {
        let pts: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", self.x(i + offset), self.y(*v)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, pts.join(" "));
    }

    fn frame(&self, out: &mut String, title: &str, labels: &[(usize, String)]) {
        let right = WIDTH - MARGIN_RIGHT;
        let bottom = self.top + PANEL_HEIGHT;
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN_LEFT}" y="{}" width="{}" height="{PANEL_HEIGHT}" fill="none" stroke="black"/>"#,
            self.top,
            right - MARGIN_LEFT
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{title}</text>"#,
            (MARGIN_LEFT + right) / 2.0,
            self.top - 8.0
        );
        for k in 0..=4 {
            let v = self.lo + (self.hi - self.lo) * k as f64 / 4.0;
            let y = self.y(v);
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="10">{v:.3}</text>"#,
                MARGIN_LEFT - 4.0,
                y + 3.0
            );
        }
        if self.lo < 0.0 && self.hi > 0.0 {
            let y = self.y(0.0);
            let _ = writeln!(
                out,
                r#"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{right}" y2="{y:.2}" stroke="grey" stroke-dasharray="4 3"/>"#
            );
        }
        for (i, label) in labels {
            let x = self.x(*i);
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-size="10">{label}</text>"#,
                bottom + 14.0
            );
        }
    }
}

/// Two stacked panels: ζ_t with its bands, and Δζ_t.
pub fn zeta_svg(path: &IntegrationSpeedPath) -> String {
    let n = path.zeta.len();
    let labels: Vec<(usize, String)> = {
        let step = (n / 8).max(1);
        (0..n)
            .step_by(step)
            .map(|i| (i, path.first_month.plus(i as i64).year.to_string()))
            .collect()
    };
    let mut series: Vec<&[f64]> = vec![&path.zeta];
    if let Some(b) = &path.bands {
        series.push(&b.lower);
        series.push(&b.upper);
    }
    let top = Panel::new(MARGIN_TOP, &series, n);
    let bottom = Panel::new(MARGIN_TOP + PANEL_HEIGHT + GAP, &[&path.acceleration], n);
    let height = MARGIN_TOP + 2.0 * PANEL_HEIGHT + GAP + 30.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    top.frame(&mut out, "Speed of integration", &labels);
    if let Some(b) = &path.bands {
        let mut pts: Vec<String> = b
            .upper
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", top.x(i), top.y(*v)))
            .collect();
        pts.extend(
            b.lower
                .iter()
                .enumerate()
                .rev()
                .map(|(i, v)| format!("{:.2},{:.2}", top.x(i), top.y(*v))),
        );
        let _ = writeln!(
            out,
            r#"<polygon fill="steelblue" fill-opacity="0.25" stroke="none" points="{}"/>"#,
            pts.join(" ")
        );
    }
    top.polyline(&mut out, &path.zeta, 0, r#"stroke="black" stroke-width="1.2""#);
    bottom.frame(&mut out, "Acceleration", &labels);
    bottom.polyline(&mut out, &path.acceleration, 1, r#"stroke="black" stroke-width="1""#);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Month;
    use crate::tv_vecm::Bands;

    #[test]
    fn two_panels_and_band_polygon() {
        let zeta = vec![0.1, 0.2, 0.15, 0.3];
        let path = IntegrationSpeedPath {
            first_month: Month::new(1900, 1).unwrap(),
            acceleration: vec![0.1, -0.05, 0.15],
            bands: Some(Bands {
                coverage: 0.9,
                lower: vec![0.05; 4],
                upper: vec![0.4; 4],
                replications: 100,
            }),
            zeta,
        };
        let svg = zeta_svg(&path);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains("Acceleration"));
    }
}
