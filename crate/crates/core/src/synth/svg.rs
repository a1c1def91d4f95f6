use std::fmt::Write;

use super::SynthResult;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD_L: f64 = 60.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 40.0;
const PAD_B: f64 = 40.0;

/// Static two-curve plot: treated (solid), synthetic (dashed) and a dashed
/// vertical rule at the event year.
pub fn render_svg(result: &SynthResult) -> String {
    let years: Vec<i32> = result.curve.iter().map(|p| p.year).collect();
    let (x0, x1) = match (years.first(), years.last()) {
        (Some(&a), Some(&b)) if b > a => (f64::from(a), f64::from(b)),
        (Some(&a), _) => (f64::from(a) - 1.0, f64::from(a) + 1.0),
        _ => (0.0, 1.0),
    };
    let values = result
        .curve
        .iter()
        .flat_map(|p| [p.treated, p.synthetic])
        .flatten();
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let sx = |x: f64| PAD_L + (x - x0) / (x1 - x0) * (W - PAD_L - PAD_R);
    let sy = |y: f64| H - PAD_B - (y - lo) / (hi - lo) * (H - PAD_T - PAD_B);

    let path = |pick: &dyn Fn(&super::CurvePoint) -> Option<f64>| {
        let mut d = String::new();
        let mut pen_down = false;
        for p in &result.curve {
            match pick(p) {
                Some(v) => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(d, "{cmd}{:.2},{:.2} ", sx(f64::from(p.year)), sy(v));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        d.trim_end().to_string()
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{} - {}</text>"#,
        W / 2.0,
        result.treated,
        result.outcome.title()
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD_L}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{b}" stroke="black"/>"#,
        b = H - PAD_B,
        r = W - PAD_R
    );
    for (v, anchor) in [(lo, "end"), (hi, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="{anchor}">{:.1}</text>"#,
            PAD_L - 6.0,
            sy(v) + 4.0,
            v
        );
    }
    for x in [x0, x1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            sx(x),
            H - PAD_B + 18.0,
            x as i32
        );
    }
    let ev = f64::from(result.event_year);
    if ev >= x0 && ev <= x1 {
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{PAD_T}" x2="{x:.2}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
            H - PAD_B,
            x = sx(ev)
        );
    }
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        path(&|p| p.treated)
    );
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
        path(&|p| p.synthetic)
    );
    s.push_str("</svg>\n");
    s
}
