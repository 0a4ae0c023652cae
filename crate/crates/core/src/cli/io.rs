//! Data CSV and model JSON formats.
//!
//! Data files start with `#grid,t1,...,td`, followed by one
//! `label,v1,...,vd` row per curve with `label ∈ {+1, -1}`. Reals are
//! written in their shortest round-trip decimal form.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::functional::{FunctionalSvmConfig, FunctionalSvmModel};
use crate::kernel::{Grid, KernelSpec};
use crate::lspline::DiscretizedFunction;
use crate::svm::{SvmModel, SvmParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Labeled curves sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub grid: Grid,
    pub labels: Vec<i8>,
    pub samples: Vec<DiscretizedFunction>,
}

pub fn format_label(label: i8) -> &'static str {
    if label > 0 {
        "+1"
    } else {
        "-1"
    }
}

pub fn render_dataset(grid: &Grid, rows: &[(i8, &[f64])]) -> String {
    let mut out = String::from("#grid");
    for t in grid.points() {
        let _ = write!(out, ",{t}");
    }
    out.push('\n');
    for (label, values) in rows {
        out.push_str(format_label(*label));
        for v in *values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn parse_dataset(text: &str, origin: &str) -> Result<Dataset, CliError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{origin}: empty data file")))?;
    let at = |line: usize, msg: String| CliError::Config(format!("{origin}:{}: {msg}", line + 1));

    let mut fields = header.trim().split(',');
    if fields.next().map(str::trim) != Some("#grid") {
        return Err(at(hline, "first line must be `#grid,t1,...,td`".into()));
    }
    let points = fields
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| at(hline, format!("bad grid point {f:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let grid = Grid::new(points).map_err(|e| at(hline, e.to_string()))?;

    let mut labels = Vec::new();
    let mut samples = Vec::new();
    for (ln, line) in lines {
        let mut fields = line.trim().split(',');
        let label = match fields.next().map(str::trim) {
            Some("+1") | Some("1") => 1,
            Some("-1") => -1,
            other => return Err(at(ln, format!("label must be +1 or -1, got {other:?}"))),
        };
        let values = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| at(ln, format!("bad value {f:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sample =
            DiscretizedFunction::new(grid.clone(), values).map_err(|e| at(ln, e.to_string()))?;
        labels.push(label);
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(CliError::Config(format!(
            "{origin}: data file has no sample rows"
        )));
    }
    Ok(Dataset {
        grid,
        labels,
        samples,
    })
}

pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read data {}: {e}", path.display())))?;
    parse_dataset(&text, &path.display().to_string())
}

/// On-disk form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub order: u32,
    pub grid: Vec<f64>,
    pub gamma: f64,
    pub jitter: f64,
    pub beta: Option<f64>,
    #[serde(rename = "C_used")]
    pub c_used: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
}

impl ModelFile {
    pub fn from_model(model: &FunctionalSvmModel) -> Self {
        let cfg = model.config();
        Self {
            format_version: MODEL_FORMAT_VERSION,
            order: cfg.spec.order(),
            grid: cfg.grid.points().to_vec(),
            gamma: cfg.gamma,
            jitter: cfg.jitter,
            beta: cfg.beta,
            c_used: model.c_used(),
            support_vectors: model.core().support_vectors().to_vec(),
            dual_coefs: model.core().dual_coefs().to_vec(),
            bias: model.core().bias(),
        }
    }

    pub fn into_model(self) -> Result<FunctionalSvmModel, CliError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        let bad = |e: crate::Error| CliError::Config(format!("invalid model: {e}"));
        let spec = KernelSpec::new(self.order).map_err(bad)?;
        let grid = Grid::new(self.grid).map_err(bad)?;
        if let Some(sv) = self
            .support_vectors
            .iter()
            .find(|sv| sv.len() != grid.len())
        {
            return Err(CliError::Config(format!(
                "invalid model: support vector of length {} on a grid of {} points",
                sv.len(),
                grid.len()
            )));
        }
        let config = FunctionalSvmConfig {
            spec,
            grid,
            gamma: self.gamma,
            jitter: self.jitter,
            beta: self.beta,
            c_override: None,
        };
        let params = SvmParams::new(self.c_used, self.gamma).map_err(bad)?;
        let core = SvmModel::new(
            self.support_vectors,
            self.dual_coefs,
            self.bias,
            params,
            crate::functional::KERNEL_ID,
        )
        .map_err(bad)?;
        FunctionalSvmModel::from_parts(config, core, self.c_used).map_err(CliError::from)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model file serializes");
        s.push('\n');
        s
    }
}

pub fn save_model(model: &FunctionalSvmModel, path: &Path) -> Result<(), CliError> {
    write_text(path, &ModelFile::from_model(model).to_json())
}

pub fn load_model(path: &Path) -> Result<FunctionalSvmModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read model {}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    file.into_model()
}
