//! Self-contained SVG emission: variogram scatter plots, raster heat maps,
//! latent contour maps, and 1-D predictive curves.
//!
//! No plotting dependency: every figure is a fixed 800x600 document built
//! from a handful of primitives, so outputs are deterministic and tests can
//! diff them by element counts instead of pixels.

use crate::variogram::VariogramModel;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Map data coordinates into the fixed plot frame.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Frame {
        let pad = |a: f64, b: f64| if (b - a).abs() < 1e-300 { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Svg {
        let mut body = String::with_capacity(16 * 1024);
        body.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\" \
             width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\">\n"
        ));
        body.push_str("<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n");
        body.push_str(&format!(
            "<text x=\"400\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"18\">{}</text>\n",
            escape(title)
        ));
        Svg { body }
    }

    fn push(&mut self, element: &str) {
        self.body.push_str(element);
        self.body.push('\n');
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, opacity: f64) {
        self.push(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" fill=\"{fill}\" \
             fill-opacity=\"{opacity:.2}\"/>"
        ));
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: f64, content: &str) {
        self.push(&format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" \
             font-family=\"sans-serif\" font-size=\"{size:.0}\">{}</text>",
            escape(content)
        ));
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }

    /// Axes, ticks and labels for a data frame.
    fn frame_axes(&mut self, frame: &Frame, x_label: &str, y_label: &str) {
        let (l, r) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (t, b) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
        self.push(&format!(
            "<rect x=\"{l:.1}\" y=\"{t:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
             stroke=\"black\" stroke-width=\"1\"/>",
            r - l,
            b - t
        ));
        for k in 0..=4 {
            let fx = frame.x0 + (frame.x1 - frame.x0) * k as f64 / 4.0;
            let px = frame.px(fx);
            self.push(&format!(
                "<line x1=\"{px:.1}\" y1=\"{b:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" \
                 stroke=\"black\"/>",
                b + 5.0
            ));
            self.text(px, b + 20.0, "middle", 12.0, &tick(fx));
            let fy = frame.y0 + (frame.y1 - frame.y0) * k as f64 / 4.0;
            let py = frame.py(fy);
            self.push(&format!(
                "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{l:.1}\" y2=\"{py:.1}\" \
                 stroke=\"black\"/>",
                l - 5.0
            ));
            self.text(l - 8.0, py + 4.0, "end", 12.0, &tick(fy));
        }
        self.text((l + r) / 2.0, HEIGHT - 15.0, "middle", 14.0, x_label);
        self.push(&format!(
            "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"14\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(y_label)
        ));
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (0.01..10000.0).contains(&a) {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

/// Variogram figure: the dispersion cloud, binned means, and optionally a
/// fitted model curve drawn up to `h_max`.
pub fn variogram_plot(
    cloud: &[(f64, f64)],
    binned: &[(f64, f64)],
    curve: Option<(&VariogramModel, f64)>,
    title: &str,
) -> String {
    let mut h_max = curve.map(|(_, h)| h).unwrap_or(0.0);
    let mut v_max = 0.0f64;
    for &(h, v) in cloud.iter().chain(binned.iter()) {
        h_max = h_max.max(h);
        v_max = v_max.max(v);
    }
    if let Some((m, h)) = curve {
        v_max = v_max.max(m.semivariance(h));
    }
    let frame = Frame::new(0.0, h_max * 1.02, 0.0, v_max * 1.05);

    let mut svg = Svg::new(title);
    svg.frame_axes(&frame, "distance h", "semivariance");

    for &(h, v) in cloud {
        svg.circle(frame.px(h), frame.py(v), 3.0, "#4477aa", 0.45);
    }
    for &(h, v) in binned {
        svg.circle(frame.px(h), frame.py(v), 6.0, "#cc3311", 0.95);
    }
    if let Some((model, h_end)) = curve {
        let mut d = String::from("M");
        let steps = 200;
        for k in 0..=steps {
            let h = h_end * k as f64 / steps as f64;
            let (x, y) = (frame.px(h), frame.py(model.semivariance(h)));
            if k == 0 {
                d.push_str(&format!("{x:.2},{y:.2}"));
            } else {
                d.push_str(&format!(" L{x:.2},{y:.2}"));
            }
        }
        svg.push(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"#228833\" stroke-width=\"2.5\"/>"
        ));
    }
    svg.finish()
}

/// Diverging blue-white-red color for t in [0, 1].
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (
            (59.0 + (250.0 - 59.0) * u) as u8,
            (76.0 + (250.0 - 76.0) * u) as u8,
            (192.0 + (250.0 - 192.0) * u) as u8,
        )
    } else {
        let u = (t - 0.5) / 0.5;
        (
            (250.0 - (250.0 - 180.0) * u) as u8,
            (250.0 - (250.0 - 4.0) * u) as u8,
            (250.0 - (250.0 - 38.0) * u) as u8,
        )
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Raster heat map of `values` laid out row-major on an nx x ny grid whose
/// cell (0,0) sits at `origin` with the given `spacing`.
pub fn heatmap(
    values: &[f64],
    nx: usize,
    ny: usize,
    origin: (f64, f64),
    spacing: (f64, f64),
    title: &str,
) -> String {
    assert_eq!(values.len(), nx * ny, "grid size mismatch");
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let (sx, sy) = spacing;
    let frame = Frame::new(
        origin.0 - sx / 2.0,
        origin.0 + (nx as f64 - 0.5) * sx,
        origin.1 - sy / 2.0,
        origin.1 + (ny as f64 - 0.5) * sy,
    );
    let mut svg = Svg::new(title);
    for iy in 0..ny {
        for ix in 0..nx {
            let v = values[iy * nx + ix];
            let x = frame.px(origin.0 + ix as f64 * sx - sx / 2.0);
            let y = frame.py(origin.1 + iy as f64 * sy + sy / 2.0);
            let w = frame.px(origin.0 + sx / 2.0) - frame.px(origin.0 - sx / 2.0);
            let h = frame.py(origin.1 - sy / 2.0) - frame.py(origin.1 + sy / 2.0);
            svg.push(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
                 fill=\"{}\"/>",
                color((v - lo) / span)
            ));
        }
    }
    svg.frame_axes(&frame, "x", "y");
    svg.text(
        WIDTH - MARGIN_RIGHT,
        MARGIN_TOP - 8.0,
        "end",
        12.0,
        &format!("min {} / max {}", tick(lo), tick(hi)),
    );
    svg.finish()
}

/// Latent surface map: heat map plus contour polylines (marching squares)
/// plus the sample locations colored by their latent value.
pub fn latent_map(
    surface: &[f64],
    nx: usize,
    ny: usize,
    origin: (f64, f64),
    spacing: f64,
    levels: &[f64],
    samples: &[(f64, f64, f64)],
    title: &str,
) -> String {
    assert_eq!(surface.len(), nx * ny, "grid size mismatch");
    let lo = surface.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = surface.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let frame = Frame::new(
        origin.0 - spacing / 2.0,
        origin.0 + (nx as f64 - 0.5) * spacing,
        origin.1 - spacing / 2.0,
        origin.1 + (ny as f64 - 0.5) * spacing,
    );
    let mut svg = Svg::new(title);
    for iy in 0..ny {
        for ix in 0..nx {
            let v = surface[iy * nx + ix];
            let x = frame.px(origin.0 + ix as f64 * spacing - spacing / 2.0);
            let y = frame.py(origin.1 + iy as f64 * spacing + spacing / 2.0);
            let w = frame.px(origin.0 + spacing / 2.0) - frame.px(origin.0 - spacing / 2.0);
            let h = frame.py(origin.1 - spacing / 2.0) - frame.py(origin.1 + spacing / 2.0);
            svg.push(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
                 fill=\"{}\" fill-opacity=\"0.75\"/>",
                color((v - lo) / span)
            ));
        }
    }

    for &level in levels {
        let segments = marching_squares(surface, nx, ny, origin, spacing, level);
        if segments.is_empty() {
            continue;
        }
        let mut d = String::new();
        for ((x1, y1), (x2, y2)) in segments {
            d.push_str(&format!(
                "M{:.2},{:.2} L{:.2},{:.2} ",
                frame.px(x1),
                frame.py(y1),
                frame.px(x2),
                frame.py(y2)
            ));
        }
        svg.push(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.5\" \
             stroke-dasharray=\"none\"/>",
            d.trim_end()
        ));
    }

    for &(x, y, v) in samples {
        svg.circle(frame.px(x), frame.py(y), 6.0, &color((v - lo) / span), 1.0);
        svg.push(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"6.00\" fill=\"none\" stroke=\"black\" \
             stroke-width=\"1\"/>",
            frame.px(x),
            frame.py(y)
        ));
    }
    svg.frame_axes(&frame, "x", "y");
    svg.finish()
}

/// Marching-squares line segments of the `level` iso-contour. Grid values
/// are row-major with x fastest; cell corners sit on grid points.
fn marching_squares(
    values: &[f64],
    nx: usize,
    ny: usize,
    origin: (f64, f64),
    spacing: f64,
    level: f64,
) -> Vec<((f64, f64), (f64, f64))> {
    let at = |ix: usize, iy: usize| values[iy * nx + ix];
    let pos = |ix: usize, iy: usize| (origin.0 + ix as f64 * spacing, origin.1 + iy as f64 * spacing);
    let mut segments = Vec::new();
    for iy in 0..ny.saturating_sub(1) {
        for ix in 0..nx.saturating_sub(1) {
            // Corner values: a (ix,iy), b (ix+1,iy), c (ix+1,iy+1), d (ix,iy+1).
            let (a, b, c, d) = (at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1));
            let code = (usize::from(a > level))
                | (usize::from(b > level) << 1)
                | (usize::from(c > level) << 2)
                | (usize::from(d > level) << 3);
            if code == 0 || code == 15 {
                continue;
            }
            let (pa, pb, pc, pd) = (pos(ix, iy), pos(ix + 1, iy), pos(ix + 1, iy + 1), pos(ix, iy + 1));
            // Edge interpolation helpers.
            let lerp = |p: (f64, f64), q: (f64, f64), vp: f64, vq: f64| {
                let t = if (vq - vp).abs() < 1e-300 { 0.5 } else { (level - vp) / (vq - vp) };
                (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
            };
            let bottom = lerp(pa, pb, a, b);
            let right = lerp(pb, pc, b, c);
            let top = lerp(pd, pc, d, c);
            let left = lerp(pa, pd, a, d);
            let mut add = |p: (f64, f64), q: (f64, f64)| segments.push((p, q));
            match code {
                1 | 14 => add(left, bottom),
                2 | 13 => add(bottom, right),
                3 | 12 => add(left, right),
                4 | 11 => add(right, top),
                6 | 9 => add(bottom, top),
                7 | 8 => add(left, top),
                5 => {
                    add(left, bottom);
                    add(right, top);
                }
                10 => {
                    add(bottom, right);
                    add(left, top);
                }
                _ => unreachable!(),
            }
        }
    }
    segments
}

/// Scatter of points colored by value (used when predictions are requested
/// at arbitrary locations rather than a raster grid).
pub fn point_map(points: &[(f64, f64, f64)], title: &str) -> String {
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(x, y, v) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if points.is_empty() {
        (x0, x1, y0, y1, lo, hi) = (0.0, 1.0, 0.0, 1.0, 0.0, 1.0);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let frame = Frame::new(x0, x1, y0, y1);
    let mut svg = Svg::new(title);
    svg.frame_axes(&frame, "x", "y");
    for &(x, y, v) in points {
        svg.circle(frame.px(x), frame.py(y), 5.0, &color((v - lo) / span), 1.0);
    }
    svg.text(
        WIDTH - MARGIN_RIGHT,
        MARGIN_TOP - 8.0,
        "end",
        12.0,
        &format!("min {} / max {}", tick(lo), tick(hi)),
    );
    svg.finish()
}

/// 1-D predictive curve with a +-2 sd band and the training points.
pub fn curve_with_band(
    x: &[f64],
    mean: &[f64],
    sd: &[f64],
    train: &[(f64, f64)],
    title: &str,
) -> String {
    assert!(x.len() == mean.len() && x.len() == sd.len(), "curve arrays must align");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..x.len() {
        lo = lo.min(mean[i] - 2.0 * sd[i]);
        hi = hi.max(mean[i] + 2.0 * sd[i]);
    }
    for &(_, z) in train {
        lo = lo.min(z);
        hi = hi.max(z);
    }
    let x0 = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let x1 = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame::new(x0, x1, lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo));

    let mut svg = Svg::new(title);
    svg.frame_axes(&frame, "x", "prediction");

    if !x.is_empty() {
        let mut band = String::from("M");
        for i in 0..x.len() {
            let (px, py) = (frame.px(x[i]), frame.py(mean[i] + 2.0 * sd[i]));
            if i == 0 {
                band.push_str(&format!("{px:.2},{py:.2}"));
            } else {
                band.push_str(&format!(" L{px:.2},{py:.2}"));
            }
        }
        for i in (0..x.len()).rev() {
            band.push_str(&format!(
                " L{:.2},{:.2}",
                frame.px(x[i]),
                frame.py(mean[i] - 2.0 * sd[i])
            ));
        }
        band.push('Z');
        svg.push(&format!("<path d=\"{band}\" fill=\"#4477aa\" fill-opacity=\"0.25\"/>"));

        let mut line = String::from("M");
        for i in 0..x.len() {
            let (px, py) = (frame.px(x[i]), frame.py(mean[i]));
            if i == 0 {
                line.push_str(&format!("{px:.2},{py:.2}"));
            } else {
                line.push_str(&format!(" L{px:.2},{py:.2}"));
            }
        }
        svg.push(&format!(
            "<path d=\"{line}\" fill=\"none\" stroke=\"#4477aa\" stroke-width=\"2.5\"/>"
        ));
    }
    for &(px, pz) in train {
        svg.circle(frame.px(px), frame.py(pz), 5.0, "#cc3311", 1.0);
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variogram::VariogramFamily;

    fn count(haystack: &str, needle: &str) -> usize {
        haystack.matches(needle).count()
    }

    #[test]
    fn variogram_plot_has_expected_elements() {
        let model =
            VariogramModel::new(VariogramFamily::Gaussian, 1.0, 2.0, 0.0).unwrap();
        let cloud = vec![(0.5, 0.2), (1.0, 0.8), (2.0, 1.1)];
        let binned = vec![(0.75, 0.5), (1.75, 1.0)];
        let svg = variogram_plot(&cloud, &binned, Some((&model, 3.0)), "variogram");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("viewBox=\"0 0 800 600\""));
        assert_eq!(count(&svg, "<circle"), 5); // 3 cloud + 2 binned
        assert_eq!(count(&svg, "<path"), 1); // the model curve
        assert!(svg.contains("semivariance"));
    }

    #[test]
    fn heatmap_emits_one_rect_per_cell() {
        let values: Vec<f64> = (0..12).map(|k| k as f64).collect();
        let svg = heatmap(&values, 4, 3, (0.0, 0.0), 1.0, "field");
        // 12 cells + background + frame rect
        assert_eq!(count(&svg, "<rect"), 14);
    }

    #[test]
    fn latent_map_draws_contours_and_samples() {
        // Surface rises along x: one vertical contour line expected.
        let mut surface = Vec::new();
        for _ in 0..4 {
            for ix in 0..5 {
                surface.push(ix as f64);
            }
        }
        let samples = vec![(0.0, 0.0, 0.0), (4.0, 3.0, 4.0)];
        let svg = latent_map(&surface, 5, 4, (0.0, 0.0), 1.0, &[2.0], &samples, "latent");
        assert!(count(&svg, "<path") >= 1, "contour path missing");
        assert_eq!(count(&svg, "<circle"), 4); // 2 fills + 2 outlines
    }

    #[test]
    fn marching_squares_vertical_line() {
        let mut surface = Vec::new();
        for _ in 0..3 {
            for ix in 0..3 {
                surface.push(ix as f64);
            }
        }
        let segs = marching_squares(&surface, 3, 3, (0.0, 0.0), 1.0, 0.5);
        assert_eq!(segs.len(), 2, "one segment per cell row crossing x = 0.5");
        for ((x1, _), (x2, _)) in segs {
            assert!((x1 - 0.5).abs() < 1e-12 && (x2 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_with_band_structure() {
        let x: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let mean: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let sd = vec![0.1; 50];
        let svg = curve_with_band(&x, &mean, &sd, &[(1.0, 0.8)], "gp");
        assert_eq!(count(&svg, "<path"), 2); // band + mean line
        assert_eq!(count(&svg, "<circle"), 1);
    }

    #[test]
    fn deterministic_output() {
        let values: Vec<f64> = (0..9).map(|k| (k as f64).sin()).collect();
        let a = heatmap(&values, 3, 3, (0.0, 0.0), 2.0, "t");
        let b = heatmap(&values, 3, 3, (0.0, 0.0), 2.0, "t");
        assert_eq!(a, b);
    }
}
