//! report.json, CSV files and gnuplot data.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Lines,
    Points,
    Steps,
}

impl Style {
    fn gnuplot(self) -> &'static str {
        match self {
            Style::Lines => "lines",
            Style::Points => "points pt 7",
            Style::Steps => "steps",
        }
    }
}

/// One plotted series; segments are separated by a blank line so gnuplot
/// does not join them.
#[derive(Debug, Clone)]
pub struct Series {
    pub title: String,
    pub style: Style,
    pub segments: Vec<Vec<(f64, f64)>>,
}

impl Series {
    pub fn new(title: impl Into<String>, style: Style, points: Vec<(f64, f64)>) -> Self {
        Series {
            title: title.into(),
            style,
            segments: vec![points],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub logscale_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Plot {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            ..Plot::default()
        }
    }

    pub fn data(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.series.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# {}", s.title);
            for (k, seg) in s.segments.iter().enumerate() {
                if k > 0 {
                    out.push('\n');
                }
                for (x, y) in seg {
                    let _ = writeln!(out, "{x} {y}");
                }
            }
        }
        out
    }

    pub fn script(&self, data_file: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "set title \"{}\"", self.title);
        let _ = writeln!(out, "set xlabel \"{}\"", self.xlabel);
        let _ = writeln!(out, "set ylabel \"{}\"", self.ylabel);
        if self.logscale_y {
            out.push_str("set logscale y\n");
        }
        out.push_str("set grid\n");
        let parts: Vec<String> = self
            .series
            .iter()
            .enumerate()
            .map(|(i, s)| {
                format!(
                    "'{data_file}' index {i} with {} title \"{}\"",
                    s.style.gnuplot(),
                    s.title.replace('"', "'")
                )
            })
            .collect();
        if !parts.is_empty() {
            let _ = writeln!(out, "plot {}", parts.join(", \\\n     "));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attachment: Option<Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub config_sha256: Option<String>,
    pub timestamp_unix: u64,
    pub task: Option<String>,
    pub seed: u64,
    pub acknowledge_hypothesis: bool,
    pub heuristic: bool,
    pub status: &'static str,
    pub exit_code: i32,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> io::Result<()> {
    fs::write(dir.join(name), text)
}

pub fn write_report(dir: &Path, report: &Report) -> io::Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    write_text(dir, "report.json", &(text + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_blocks_and_script() {
        let mut plot = Plot::new("t", "x", "y");
        plot.series.push(Series {
            title: "intervals".into(),
            style: Style::Lines,
            segments: vec![vec![(-2.0, 0.0), (2.0, 0.0)], vec![(3.0, 0.0), (7.0, 0.0)]],
        });
        plot.series.push(Series::new("eig", Style::Points, vec![(3.5, 0.0)]));
        let data = plot.data();
        assert_eq!(data, "# intervals\n-2 0\n2 0\n\n3 0\n7 0\n\n\n# eig\n3.5 0\n");
        let script = plot.script("plot.dat");
        assert!(script.contains("'plot.dat' index 0 with lines title \"intervals\""));
        assert!(script.contains("'plot.dat' index 1 with points pt 7 title \"eig\""));
    }
}
