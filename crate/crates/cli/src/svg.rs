//! Minimal SVG plots: a heatmap for 2D fields, a polyline for 1D fields.

use std::fmt::Write;

use spectropt::ScalarField;

const SIZE: f64 = 480.0;

/// Blue to yellow ramp over `t ∈ [0, 1]`.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (68.0 + t * (253.0 - 68.0)) as u8;
    let g = (1.0 + t * (231.0 - 1.0)) as u8;
    let b = (84.0 + t * (37.0 - 84.0)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Renders `f`; masked nodes, when given, go into their own grey layer.
pub fn field(f: &ScalarField, mask: Option<&[bool]>) -> String {
    let g = f.grid();
    let masked = |i: usize| mask.is_some_and(|m| m[i]);
    let free: Vec<f64> = (0..g.len()).filter(|&i| !masked(i)).map(|i| f.get(i)).collect();
    let lo = free.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = free.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let n = g.n();
    if g.dim() == 2 {
        let cell = SIZE / n as f64;
        let _ = writeln!(s, r#"<g id="field">"#);
        for i in 0..g.len() {
            if masked(i) {
                continue;
            }
            let (col, row) = (i % n, i / n);
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}" fill="{}"/>"#,
                col as f64 * cell,
                (n - 1 - row) as f64 * cell,
                color((f.get(i) - lo) / span)
            );
        }
        let _ = writeln!(s, "</g>");
        if mask.is_some() {
            let _ = writeln!(s, r##"<g id="mask" fill="#808080">"##);
            for i in (0..g.len()).filter(|&i| masked(i)) {
                let (col, row) = (i % n, i / n);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}"/>"#,
                    col as f64 * cell,
                    (n - 1 - row) as f64 * cell
                );
            }
            let _ = writeln!(s, "</g>");
        }
    } else {
        let x = |i: usize| SIZE * (i as f64 + 1.0) / (n as f64 + 1.0);
        let y = |v: f64| SIZE * (0.95 - 0.9 * (v - lo) / span);
        let points: Vec<String> = (0..n)
            .filter(|&i| !masked(i))
            .map(|i| format!("{:.3},{:.3}", x(i), y(f.get(i))))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline id="field" fill="none" stroke="#1f3a93" stroke-width="1.5" points="{}"/>"##,
            points.join(" ")
        );
        if mask.is_some() {
            let _ = writeln!(s, r##"<g id="mask" fill="#808080">"##);
            for i in (0..n).filter(|&i| masked(i)) {
                let _ = writeln!(s, r#"<rect x="{:.3}" y="0" width="{:.3}" height="{SIZE}"/>"#, x(i) - 0.5 * SIZE / (n as f64 + 1.0), SIZE / (n as f64 + 1.0));
            }
            let _ = writeln!(s, "</g>");
        }
    }
    s.push_str("</svg>\n");
    s
}
