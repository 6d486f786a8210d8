//! Artifact writing: every report exists twice, as human-readable text and
//! as machine-readable CSV. All files of a run land in one output
//! directory, written sequentially by whichever command owns the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// The output directory of a run.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    /// Create the directory (and parents) if needed.
    pub fn create(path: &Path) -> Result<Self> {
        std::fs::create_dir_all(path)
            .with_context(|| format!("creating output directory {}", path.display()))?;
        Ok(OutDir {
            root: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Write a CSV file from a header line and string rows. Fields are
    /// plain numbers and bracket-free names, so no quoting is needed.
    pub fn csv<I>(&self, name: &str, header: &str, rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut body = String::new();
        body.push_str(header);
        body.push('\n');
        for row in rows {
            debug_assert!(row.iter().all(|f| !f.contains(',')), "unquoted CSV field");
            body.push_str(&row.join(","));
            body.push('\n');
        }
        self.text(name, &body)
    }

    /// Write a text file.
    pub fn text(&self, name: &str, content: &str) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
    }
}

/// One pass/fail line of a run summary.
#[derive(Debug, Clone)]
pub struct SummaryLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The run summary: one line per enabled check, written as text and CSV.
/// The process exit status is 0 iff every line passes.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    lines: Vec<SummaryLine>,
}

impl Summary {
    pub fn new() -> Self {
        Summary::default()
    }

    pub fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.lines.push(SummaryLine {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Render the text form (also printed to stdout by the commands).
    pub fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let tag = if l.passed { "PASS" } else { "FAIL" };
            writeln!(s, "{tag} {} - {}", l.name, l.detail).unwrap();
        }
        writeln!(
            s,
            "overall: {}",
            if self.all_passed() { "PASS" } else { "FAIL" }
        )
        .unwrap();
        s
    }

    /// Write summary.txt and summary.csv into the output directory.
    pub fn write(&self, out: &OutDir) -> Result<()> {
        out.text("summary.txt", &self.render())?;
        out.csv(
            "summary.csv",
            "check,status,detail",
            self.lines.iter().map(|l| {
                vec![
                    l.name.clone(),
                    if l.passed { "pass" } else { "fail" }.to_string(),
                    // commas would break the unquoted format
                    l.detail.replace(',', ";"),
                ]
            }),
        )
    }
}

/// Write a machine-readable error record (used before a nonzero exit).
pub fn write_error_record(out_path: &Path, stage: &str, message: &str) {
    if let Ok(out) = OutDir::create(out_path) {
        let _ = out.csv(
            "error.csv",
            "stage,message",
            [vec![stage.to_string(), message.replace(',', ";").replace('\n', " ")]],
        );
    }
}

/// Uniform float formatting for CSV cells: enough digits to round-trip.
pub fn fnum(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v:.17e}")
    }
}

/// Shorter float formatting for human-readable tables.
pub fn fshort(v: f64) -> String {
    format!("{v:.6e}")
}
