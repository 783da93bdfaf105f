//! Minimal SVG line charts for the reproduction reports. No dependency,
//! just enough for metric-versus-n curves and density overlays.

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub series: Vec<Series<'a>>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

impl Chart<'_> {
    pub fn render(&self) -> String {
        let xs = |v: f64| if self.log_x { v.log10() } else { v };
        let all: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (xs(x), y)))
            .collect();
        let (x_min, mut x_max) = bounds(all.iter().map(|p| p.0));
        let (y_min_raw, mut y_max) = bounds(all.iter().map(|p| p.1));
        let mut y_min = y_min_raw.min(0.0);
        if x_max == x_min {
            x_max = x_min + 1.0;
        }
        if y_max == y_min {
            y_max = y_min + 1.0;
        }
        y_max += (y_max - y_min) * 0.05;
        y_min -= (y_max - y_min) * 0.02;

        let px = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * (W - MARGIN_L - MARGIN_R);
        let py = |y: f64| H - MARGIN_B - (y - y_min) / (y_max - y_min) * (H - MARGIN_T - MARGIN_B);

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
             viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            W / 2.0,
            escape(self.title)
        ));

        // axes
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n",
            MARGIN_L,
            H - MARGIN_B,
            W - MARGIN_R
        ));
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
            MARGIN_L,
            MARGIN_T,
            H - MARGIN_B
        ));

        for t in 0..=4 {
            let fy = y_min + (y_max - y_min) * t as f64 / 4.0;
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
                MARGIN_L - 6.0,
                py(fy) + 4.0,
                format_tick(fy)
            ));
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{2}\" x2=\"{}\" y2=\"{2}\" stroke=\"#ddd\"/>\n",
                MARGIN_L,
                W - MARGIN_R,
                py(fy)
            ));
        }
        for t in 0..=4 {
            let fx = x_min + (x_max - x_min) * t as f64 / 4.0;
            let label = if self.log_x { 10f64.powf(fx) } else { fx };
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                px(fx),
                H - MARGIN_B + 18.0,
                format_tick(label)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            W / 2.0,
            H - 10.0,
            escape(self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            H / 2.0,
            H / 2.0,
            escape(self.y_label)
        ));

        for (i, s) in self.series.iter().enumerate() {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(xs(x)), py(y)))
                .collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                s.color,
                path.join(" ")
            ));
            let ly = MARGIN_T + 14.0 * i as f64;
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"3\" fill=\"{}\"/>\n",
                W - MARGIN_R - 150.0,
                ly - 3.0,
                s.color
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\">{}</text>\n",
                W - MARGIN_R - 135.0,
                ly,
                escape(s.name)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() {
        (0.0, 1.0)
    } else {
        (min, max)
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
