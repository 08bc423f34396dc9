//! Flat tables and static charts from an analysis report.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::criteria::{CriterionResult, Family};
use crate::data::AnalysisReport;

pub const CSV_HEADER: &str = "id,value,normalized,stderr,ncd";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// One row per criterion.
pub fn results_csv(results: &[CriterionResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        writeln!(out, "{},{:e},{:e},{},{}", r.id, r.value, r.normalized, opt(r.stderr), opt(r.ncd)).unwrap();
    }
    out
}

pub fn report_csv(report: &AnalysisReport) -> String {
    results_csv(&report.results)
}

/// Results grouped by family, in report order.
pub fn family_series(report: &AnalysisReport) -> BTreeMap<String, Vec<&CriterionResult>> {
    let mut out: BTreeMap<String, Vec<&CriterionResult>> = BTreeMap::new();
    for r in report.results.iter().filter(|r| r.family != Family::F) {
        out.entry(r.family.to_string()).or_default().push(r);
    }
    out
}

/// `F_kl1` results arranged along the five lines near the diagonal:
/// `(line label, [(k, normalized)])`.
pub fn f_series(report: &AnalysisReport) -> Vec<(String, Vec<(usize, f64)>)> {
    let mut lines: BTreeMap<i64, Vec<(usize, f64)>> = BTreeMap::new();
    for r in report.results.iter().filter(|r| r.family == Family::F) {
        let Some((a, b)) = parse_f_id(&r.id) else { continue };
        let offset = a as i64 - b as i64;
        if offset.abs() <= 2 {
            lines.entry(offset).or_default().push((a.min(b), r.normalized));
        }
    }
    [0i64, 1, 2, -1, -2]
        .into_iter()
        .filter_map(|o| {
            let mut pts = lines.remove(&o)?;
            pts.sort_by_key(|p| p.0);
            let label = match o {
                0 => "kk".to_string(),
                o if o > 0 => format!("(k+{o})k"),
                o => format!("k(k+{})", -o),
            };
            Some((label, pts))
        })
        .collect()
}

fn parse_f_id(id: &str) -> Option<(usize, usize)> {
    let mut it = id.strip_prefix("F_")?.split('_');
    let a = it.next()?.parse().ok()?;
    let b = it.next()?.parse().ok()?;
    Some((a, b))
}

pub fn f_series_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("line,k,normalized\n");
    for (label, pts) in f_series(report) {
        for (k, v) in pts {
            writeln!(out, "{label},{k},{v:e}").unwrap();
        }
    }
    out
}

/// Per family: `id,normalized,stderr,ncd`.
pub fn family_csv(results: &[&CriterionResult]) -> String {
    let mut out = String::from("id,normalized,stderr,ncd\n");
    for r in results {
        writeln!(out, "{},{:e},{},{}", r.id, r.normalized, opt(r.stderr), opt(r.ncd)).unwrap();
    }
    out
}

/// A named series of `(x, y)` points.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Static line-and-marker chart. `x_labels` names integer x positions when
/// given.
pub fn svg_chart(title: &str, series: &[Series], x_labels: Option<&[String]>) -> String {
    let (w, h, m) = (720.0, 420.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, w / 2.0, escape(title)).unwrap();
    writeln!(out, r#"<line x1="{m}" y1="{}" x2="{m}" y2="{}" stroke="black"/>"#, m, h - m).unwrap();
    writeln!(out, r#"<line x1="{m}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#, h - m, w - m).unwrap();
    writeln!(out, r#"<line x1="{m}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#, sy(0.0), w - m).unwrap();
    for (v, label) in [(y0, y0), (y1, y1)] {
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3e}</text>"#, m - 4.0, sy(v) + 4.0, label).unwrap();
    }
    if let Some(labels) = x_labels {
        for (i, l) in labels.iter().enumerate() {
            let x = sx(i as f64);
            writeln!(
                out,
                r#"<text x="{x:.2}" y="{0}" transform="rotate(60 {x:.2} {0})" font-family="sans-serif" font-size="10">{1}</text>"#,
                h - m + 12.0,
                escape(l)
            )
            .unwrap();
        }
    } else {
        for v in [x0, x1] {
            writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{v}</text>"#, sx(v), h - m + 16.0).unwrap();
        }
    }
    for (n, s) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let finite: Vec<_> = s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        let path: Vec<String> = finite.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, path.join(" ")).unwrap();
        for p in &finite {
            writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(p.0), sy(p.1)).unwrap();
        }
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            w - m + 4.0,
            m + 16.0 * n as f64,
            escape(&s.name)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Normalized values and depths of one family against criterion index.
pub fn family_svg(family: &str, results: &[&CriterionResult]) -> String {
    let labels: Vec<String> = results.iter().map(|r| r.id.clone()).collect();
    let values = Series {
        name: "normalized".into(),
        points: results.iter().enumerate().map(|(i, r)| (i as f64, r.normalized)).collect(),
    };
    let depths = Series {
        name: "ncd".into(),
        points: results.iter().enumerate().filter_map(|(i, r)| r.ncd.map(|t| (i as f64, t))).collect(),
    };
    svg_chart(&format!("{family} criteria"), &[values, depths], Some(&labels))
}

pub fn f_svg(report: &AnalysisReport) -> String {
    let series: Vec<Series> = f_series(report)
        .into_iter()
        .map(|(name, pts)| Series { name, points: pts.into_iter().map(|(k, v)| (k as f64, v)).collect() })
        .collect();
    svg_chart("normalized F along the diagonal lines", &series, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::Scope;
    use crate::data::Provenance;

    fn result(id: &str, family: Family, normalized: f64) -> CriterionResult {
        CriterionResult {
            id: id.into(),
            family,
            scope: Scope::Global,
            order: 2,
            value: normalized,
            normalized,
            stderr: None,
            violated: normalized < 0.0,
            ncd: None,
            ncd_bracketed: None,
            redundant: false,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = AnalysisReport::new(vec![], Provenance::default()).unwrap();
        assert_eq!(report_csv(&r), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_rows_and_f_lines() {
        let mut res: Vec<CriterionResult> = (0..10).map(|i| result(&format!("E_{i}"), Family::E, -1.0)).collect();
        res.push(result("F_3_3_1", Family::F, -0.5));
        res.push(result("F_1_1_1", Family::F, -0.2));
        res.push(result("F_2_1_1", Family::F, 0.1));
        res.push(result("F_1_4_1", Family::F, 0.1));
        let r = AnalysisReport::new(res, Provenance::default()).unwrap();
        assert_eq!(report_csv(&r).lines().count(), 15);
        let f = f_series(&r);
        assert_eq!(f[0], ("kk".to_string(), vec![(1, -0.2), (3, -0.5)]));
        assert_eq!(f[1].0, "(k+1)k");
        assert_eq!(f.len(), 2);
        assert_eq!(family_series(&r)["E"].len(), 10);
        assert!(f_svg(&r).starts_with("<svg"));
    }
}
