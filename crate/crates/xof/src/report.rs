//! Reading metric CSVs back and rendering learning-curve plots as SVG.
//!
//! The plot shows two panels — moving accuracy and generality rate over
//! trials — with one line per input CSV (use the aggregate CSVs to get one
//! line per variant). Blank generality cells break the line rather than
//! plotting zero.

use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: row {line}: {problem}")]
    Row {
        path: String,
        line: usize,
        problem: String,
    },
    #[error("no input CSVs to plot")]
    NoInput,
}

/// One parsed CSV row; integer columns are read as floats so aggregate
/// (mean) files parse too.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub trials: f64,
    pub accuracy: f64,
    pub generality_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CurveSeries {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

pub fn parse_csv(text: &str, source: &str) -> Result<Vec<CurvePoint>, ReportError> {
    let row_err = |line: usize, problem: String| ReportError::Row {
        path: source.to_string(),
        line,
        problem,
    };
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if i == 0 {
            if !raw.starts_with("trials,") {
                return Err(row_err(1, format!("expected a metrics header, got `{raw}`")));
            }
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        let line = i + 1;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() < 3 {
            return Err(row_err(line, format!("expected at least 3 fields, got `{raw}`")));
        }
        let trials: f64 = fields[0]
            .parse()
            .map_err(|e| row_err(line, format!("bad trials value `{}`: {e}", fields[0])))?;
        let accuracy: f64 = fields[1]
            .parse()
            .map_err(|e| row_err(line, format!("bad accuracy value `{}`: {e}", fields[1])))?;
        let generality_rate = if fields[2].is_empty() {
            None
        } else {
            Some(fields[2].parse().map_err(|e| {
                row_err(line, format!("bad generality value `{}`: {e}", fields[2]))
            })?)
        };
        rows.push(CurvePoint {
            trials,
            accuracy,
            generality_rate,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<CurveSeries, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(CurveSeries {
        points: parse_csv(&text, &path.display().to_string())?,
        label,
    })
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

struct Panel {
    x0: f64,
    y0: f64,
    width: f64,
    height: f64,
}

impl Panel {
    fn map(&self, x: f64, x_max: f64, y: f64, y_max: f64) -> (f64, f64) {
        let px = self.x0 + (x / x_max.max(1.0)) * self.width;
        let py = self.y0 + self.height - (y / y_max.max(f64::MIN_POSITIVE)) * self.height;
        (px, py)
    }
}

/// Renders the two-panel learning-curve figure.
pub fn render_svg(series: &[CurveSeries]) -> Result<String, ReportError> {
    if series.is_empty() {
        return Err(ReportError::NoInput);
    }
    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.trials))
        .fold(0.0f64, f64::max);
    let g_max = series
        .iter()
        .flat_map(|s| s.points.iter().filter_map(|p| p.generality_rate))
        .fold(0.0f64, f64::max)
        .max(1e-6)
        * 1.1;

    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"980\" height=\"460\" \
         font-family=\"sans-serif\" font-size=\"12\">\n",
    );
    svg.push_str("<rect width=\"980\" height=\"460\" fill=\"white\"/>\n");

    let accuracy_panel = Panel {
        x0: 60.0,
        y0: 60.0,
        width: 380.0,
        height: 320.0,
    };
    let generality_panel = Panel {
        x0: 560.0,
        y0: 60.0,
        width: 380.0,
        height: 320.0,
    };

    for (panel, title, y_max) in [
        (&accuracy_panel, "moving accuracy", 1.0),
        (&generality_panel, "generality rate", g_max),
    ] {
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
            panel.x0, panel.y0, panel.width, panel.height
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
            panel.x0 + panel.width / 2.0,
            panel.y0 - 12.0
        ));
        for tick in 0..=4 {
            let frac = tick as f64 / 4.0;
            let y = panel.y0 + panel.height * (1.0 - frac);
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#ddd\"/>\n",
                panel.x0,
                panel.x0 + panel.width
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n",
                panel.x0 - 6.0,
                y + 4.0,
                frac * y_max
            ));
            let x = panel.x0 + panel.width * frac;
            svg.push_str(&format!(
                "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{:.0}</text>\n",
                panel.y0 + panel.height + 16.0,
                frac * x_max
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">trials</text>\n",
            panel.x0 + panel.width / 2.0,
            panel.y0 + panel.height + 36.0
        ));
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let accuracy_points: Vec<(f64, f64)> = s
            .points
            .iter()
            .map(|p| accuracy_panel.map(p.trials, x_max, p.accuracy, 1.0))
            .collect();
        push_polyline(&mut svg, &accuracy_points, color);

        // Undefined generality breaks the line into segments.
        let mut segment: Vec<(f64, f64)> = Vec::new();
        for p in &s.points {
            match p.generality_rate {
                Some(g) => segment.push(generality_panel.map(p.trials, x_max, g, g_max)),
                None => {
                    push_polyline(&mut svg, &segment, color);
                    segment.clear();
                }
            }
        }
        push_polyline(&mut svg, &segment, color);

        let legend_y = 24.0 + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"60\" y1=\"{legend_y}\" x2=\"90\" y2=\"{legend_y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"96\" y=\"{}\">{}</text>\n",
            legend_y + 4.0,
            s.label
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn push_polyline(svg: &mut String, points: &[(f64, f64)], color: &str) {
    if points.len() < 2 {
        // Lone points still get a marker so short segments stay visible.
        if let Some((x, y)) = points.first() {
            svg.push_str(&format!(
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{color}\"/>\n"
            ));
        }
        return;
    }
    let coords: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        coords.join(" ")
    ));
}

/// Reads every CSV and renders the figure.
pub fn plot_files(paths: &[std::path::PathBuf]) -> Result<String, ReportError> {
    let mut series = Vec::new();
    for path in paths {
        series.push(read_csv(path)?);
    }
    render_svg(&series)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "trials,accuracy,generality_rate,macro_size,ol_size,mean_cf_depth\n\
                        500,0.600000,,10,3,1.000000\n\
                        1000,0.900000,0.040000,12,4,1.200000\n";

    #[test]
    fn parses_blank_generality_as_none() {
        let rows = parse_csv(GOOD, "test.csv").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].generality_rate, None);
        assert_eq!(rows[1].generality_rate, Some(0.04));
    }

    #[test]
    fn parse_errors_name_the_row() {
        let bad = "trials,accuracy,generality_rate\n500,oops,0.1\n";
        let err = parse_csv(bad, "bad.csv").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("bad.csv"), "{text}");
        assert!(text.contains("row 2"), "{text}");

        let no_header = "1,2,3\n";
        assert!(parse_csv(no_header, "x.csv").is_err());
    }

    #[test]
    fn single_series_renders_one_accuracy_line() {
        let series = CurveSeries {
            label: "demo".into(),
            points: parse_csv(GOOD, "demo").unwrap(),
        };
        let svg = render_svg(&[series]).unwrap();
        assert!(svg.contains("<svg"));
        assert!(svg.contains("demo"));
        // One accuracy polyline; the generality column has a single defined
        // point, drawn as a marker.
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn gaps_split_generality_lines() {
        let text = "trials,accuracy,generality_rate\n\
                    1,0.5,0.01\n2,0.5,0.02\n3,0.5,\n4,0.5,0.03\n5,0.5,0.04\n";
        let series = CurveSeries {
            label: "gap".into(),
            points: parse_csv(text, "gap").unwrap(),
        };
        let svg = render_svg(&[series]).unwrap();
        // Accuracy line + two generality segments split by the gap.
        assert_eq!(svg.matches("<polyline").count(), 3);
    }

    #[test]
    fn four_series_get_four_legend_entries() {
        let points = parse_csv(GOOD, "p").unwrap();
        let series: Vec<CurveSeries> = ["bf", "scff", "gcff", "gcff-ncf"]
            .iter()
            .map(|name| CurveSeries {
                label: name.to_string(),
                points: points.clone(),
            })
            .collect();
        let svg = render_svg(&series).unwrap();
        for name in ["bf", "scff", "gcff", "gcff-ncf"] {
            assert!(svg.contains(&format!(">{name}</text>")));
        }
    }
}
