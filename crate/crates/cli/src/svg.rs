//! Minimal SVG bar chart for the density table.

use std::fmt::Write;

pub fn bar_chart(bars: &[(String, f64)], y_label: &str) -> String {
    let (bar_w, gap, plot_h, left, top, bottom) = (18.0, 4.0, 240.0, 48.0, 16.0, 72.0);
    let width = left + bars.len() as f64 * (bar_w + gap) + gap;
    let height = top + plot_h + bottom;
    let max = bars.iter().map(|b| b.1).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">{y_label}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{width}" y2="{}" stroke="black"/>"#,
        top + plot_h,
        top + plot_h
    );
    for (i, (label, v)) in bars.iter().enumerate() {
        let h = v / max * plot_h;
        let x = left + gap + i as f64 * (bar_w + gap);
        let y = top + plot_h - h;
        let _ = writeln!(s, r##"<rect x="{x}" y="{y:.2}" width="{bar_w}" height="{h:.2}" fill="#4a7ab5"><title>{label}: {v:.4}</title></rect>"##);
        let lx = x + bar_w / 2.0;
        let ly = top + plot_h + 8.0;
        let _ = writeln!(s, r#"<text x="{lx}" y="{ly}" transform="rotate(60 {lx} {ly})">{label}</text>"#);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_rect_per_bar() {
        let svg = bar_chart(&[("a".into(), 1.0), ("b".into(), 0.5)], "d");
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.contains("height=\"120.00\""));
        assert!(svg.ends_with("</svg>\n"));
    }
}
