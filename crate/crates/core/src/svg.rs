//! SVG overlay of predicted distances, in image pixel coordinates.

use std::fmt::Write as _;

use crate::roi::{DistanceReport, ObjectDistance};

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// `"<class> <abs> m"`, or the relative distance when uncalibrated.
pub fn label(object: &ObjectDistance) -> String {
    match object.abs {
        Some(abs) => format!("{} {:.2} m", object.detection.class_name, abs),
        None => format!("{} rev {:.2} m", object.detection.class_name, object.rev),
    }
}

/// One `<rect>` and one `<text>` per object.
pub fn render_overlay(report: &DistanceReport, width: u32, height: u32) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    for object in &report.objects {
        let b = &object.detection.bbox;
        let _ = writeln!(
            svg,
            r#"  <rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="lime" stroke-width="2"/>"#,
            b.x0(),
            b.y0(),
            b.width(),
            b.height()
        );
        // keep the label inside the canvas for boxes touching the top edge
        let text_y = if b.y0() >= 14.0 {
            b.y0() - 4.0
        } else {
            b.y0() + 14.0
        };
        let _ = writeln!(
            svg,
            r#"  <text x="{}" y="{}" fill="lime" font-family="sans-serif" font-size="14">{}</text>"#,
            b.x0(),
            text_y,
            escape(&label(object))
        );
    }
    svg.push_str("</svg>\n");
    svg
}
