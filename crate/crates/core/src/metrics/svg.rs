//! Minimal self-contained SVG rendering of an ROC curve.

use super::RocCurve;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 48.0;

/// Render the curve with a diagonal chance line. The output is a complete
/// standalone SVG document.
pub fn render_roc_svg(curve: &RocCurve, title: &str) -> String {
    let plot = SIZE - 2.0 * MARGIN;
    let x = |fpr: f64| MARGIN + fpr * plot;
    let y = |tpr: f64| SIZE - MARGIN - tpr * plot;

    let path: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", x(p.fpr), y(p.tpr)))
        .collect();

    let mut ticks = String::new();
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        ticks.push_str(&format!(
            "<text x='{:.1}' y='{:.1}' font-size='11' text-anchor='middle'>{:.1}</text>\n",
            x(f),
            SIZE - MARGIN + 16.0,
            f
        ));
        ticks.push_str(&format!(
            "<text x='{:.1}' y='{:.1}' font-size='11' text-anchor='end'>{:.1}</text>\n",
            MARGIN - 6.0,
            y(f) + 4.0,
            f
        ));
    }

    format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{size}' height='{size}' \
viewBox='0 0 {size} {size}'>\n\
<rect width='{size}' height='{size}' fill='white'/>\n\
<text x='{mid}' y='24' font-size='14' text-anchor='middle'>{title}</text>\n\
<rect x='{m}' y='{m}' width='{plot}' height='{plot}' fill='none' stroke='black'/>\n\
<line x1='{m}' y1='{bottom}' x2='{right}' y2='{m}' stroke='gray' stroke-dasharray='6,4'/>\n\
{ticks}\
<text x='{mid}' y='{size_less_8}' font-size='12' text-anchor='middle'>false positive rate</text>\n\
<text x='14' y='{mid}' font-size='12' text-anchor='middle' transform='rotate(-90 14 {mid})'>true positive rate</text>\n\
<polyline points='{path}' fill='none' stroke='#1f77b4' stroke-width='2'/>\n\
</svg>\n",
        size = SIZE,
        size_less_8 = SIZE - 8.0,
        mid = SIZE / 2.0,
        m = MARGIN,
        plot = plot,
        bottom = SIZE - MARGIN,
        right = SIZE - MARGIN,
        title = title,
        ticks = ticks,
        path = path.join(" "),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::roc_curve;

    #[test]
    fn renders_standalone_document() {
        let curve = roc_curve(&[0.9, 0.2, 0.7], &[1, 0, 0]).unwrap();
        let svg = render_roc_svg(&curve, "validation");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("validation"));
    }
}
