//! Deterministic SVG scatter rendering of a snapshot CSV.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use xtreaming::data::read_snapshot;
use xtreaming::error::{Error, Result};

use crate::PlotArgs;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 800.0;
const MARGIN_FRACTION: f64 = 0.05;
const RADIUS: f64 = 2.0;

/// Categorical palette; labels beyond ten wrap around.
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Reads `id,...,label` rows (header optional `id,step,label` format from
/// generate, or bare one-label-per-line).
fn read_labels(path: &Path) -> Result<HashMap<u64, usize>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut labels = HashMap::new();
    let mut data_row = 0u64;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.chars().any(|c| c.is_ascii_alphabetic())) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let (id, label) = match fields.len() {
            1 => (data_row, fields[0]),
            _ => (
                fields[0].parse().map_err(|_| Error::Parse {
                    row: i + 1,
                    message: format!("bad id {:?}", fields[0]),
                })?,
                *fields.last().unwrap(),
            ),
        };
        let label: usize = label.parse().map_err(|_| Error::Parse {
            row: i + 1,
            message: format!("bad label {label:?}"),
        })?;
        labels.insert(id, label);
        data_row += 1;
    }
    Ok(labels)
}

fn format_opacity(o: f64) -> String {
    // Trims trailing zeros so S = S_p renders exactly as "1".
    let s = format!("{o:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

pub fn plot(args: &PlotArgs) -> Result<()> {
    let rows = read_snapshot(&args.layout)?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument("snapshot has no points".into()));
    }
    let labels = match &args.labels {
        Some(path) => Some(read_labels(path)?),
        None => None,
    };

    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in &rows {
        min_x = min_x.min(r.x);
        max_x = max_x.max(r.x);
        min_y = min_y.min(r.y);
        max_y = max_y.max(r.y);
    }
    let span_x = (max_x - min_x).max(f64::MIN_POSITIVE);
    let span_y = (max_y - min_y).max(f64::MIN_POSITIVE);
    let margin_x = span_x * MARGIN_FRACTION;
    let margin_y = span_y * MARGIN_FRACTION;
    let scale_x = WIDTH / (span_x + 2.0 * margin_x);
    let scale_y = HEIGHT / (span_y + 2.0 * margin_y);
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            (x - min_x + margin_x) * scale_x,
            // SVG y grows downward; flip so the layout reads naturally.
            HEIGHT - (y - min_y + margin_y) * scale_y,
        )
    };

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    for r in &rows {
        let (cx, cy) = to_px(r.x, r.y);
        let fill = match &labels {
            Some(map) => {
                let label = map.get(&r.id).ok_or_else(|| {
                    Error::InvalidArgument(format!("no label for point id {}", r.id))
                })?;
                PALETTE[label % PALETTE.len()]
            }
            None => PALETTE[0],
        };
        writeln!(
            svg,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{RADIUS}" fill="{fill}" fill-opacity="{}"/>"#,
            format_opacity(r.opacity)
        )
        .unwrap();
    }
    writeln!(svg, "</svg>").unwrap();

    std::fs::write(&args.out, svg).map_err(|source| Error::Io {
        path: args.out.display().to_string(),
        source,
    })
}
