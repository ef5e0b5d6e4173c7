//! Evaluation: RMSE, gradient histograms and the dataset benchmark.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{DepthImage, GuideImage};
use crate::io::{read_depth_auto, read_guide_auto};
use crate::pipeline::{upsample, SolverParams};
use crate::resample::resize_to;
use crate::simulate::simulate_lr;

/// Published RMSE values, shipped for side-by-side display only.
pub const REFERENCE_RMSE_CSV: &str = include_str!("../data/reference_rmse.csv");

/// Root mean squared error over the pixels selected by `mask` (all pixels
/// when `None`).
pub fn rmse(pred: &DepthImage, gt: &DepthImage, mask: Option<&[bool]>) -> Result<f64> {
    pred.ensure_same_dims(gt, "rmse")?;
    let mut sum = 0.0;
    let mut count = 0usize;
    match mask {
        Some(mask) => {
            if mask.len() != gt.len() {
                return Err(Error::DimensionMismatch(format!(
                    "mask has {} entries for {} pixels",
                    mask.len(),
                    gt.len()
                )));
            }
            for ((p, g), &keep) in pred.data().iter().zip(gt.data()).zip(mask) {
                if keep {
                    sum += (p - g) * (p - g);
                    count += 1;
                }
            }
        }
        None => {
            for (p, g) in pred.data().iter().zip(gt.data()) {
                sum += (p - g) * (p - g);
            }
            count = gt.len();
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok((sum / count as f64).sqrt())
}

/// Histogram of absolute forward differences along one axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirectionStats {
    /// Magnitude (integer levels) to count.
    pub histogram: BTreeMap<u64, u64>,
    pub total: u64,
}

impl DirectionStats {
    fn add(&mut self, magnitude: u64) {
        *self.histogram.entry(magnitude).or_default() += 1;
        self.total += 1;
    }

    fn fraction_where(&self, pred: impl Fn(u64) -> bool) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n: u64 = self
            .histogram
            .iter()
            .filter(|(&m, _)| pred(m))
            .map(|(_, &c)| c)
            .sum();
        n as f64 / self.total as f64
    }

    pub fn fraction_zero(&self) -> f64 {
        self.fraction_where(|m| m == 0)
    }

    pub fn fraction_one(&self) -> f64 {
        self.fraction_where(|m| m == 1)
    }

    pub fn fraction_above_one(&self) -> f64 {
        self.fraction_where(|m| m > 1)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradientStats {
    pub horizontal: DirectionStats,
    pub vertical: DirectionStats,
}

impl GradientStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,magnitude,count,fraction\n");
        for (name, d) in [
            ("horizontal", &self.horizontal),
            ("vertical", &self.vertical),
        ] {
            for (m, c) in &d.histogram {
                let _ = writeln!(out, "{name},{m},{c},{:.6}", *c as f64 / d.total as f64);
            }
        }
        out
    }
}

/// Histograms of `|u[x+1] - u[x]|` and `|u[y+1] - u[y]|` after rounding the
/// depth to integer levels. Differences across the wrap-around seam are not
/// counted.
pub fn gradient_stats(depth: &DepthImage) -> GradientStats {
    let (w, h) = depth.dims();
    let level = |x: usize, y: usize| depth.get(x, y).round() as i64;
    let mut stats = GradientStats::default();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                stats
                    .horizontal
                    .add((level(x + 1, y) - level(x, y)).unsigned_abs());
            }
            if y + 1 < h {
                stats
                    .vertical
                    .add((level(x, y + 1) - level(x, y)).unsigned_abs());
            }
        }
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Bicubic,
    Ours,
    Gfl0,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bicubic => "bicubic",
            Method::Ours => "ours",
            Method::Gfl0 => "gfl0",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bicubic" => Ok(Method::Bicubic),
            "ours" => Ok(Method::Ours),
            "gfl0" => Ok(Method::Gfl0),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub name: String,
    pub factor: usize,
    pub method: Method,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    /// Entries that could not be evaluated, with the reason.
    pub failures: Vec<(String, String)>,
}

impl EvalReport {
    pub fn get(&self, name: &str, factor: usize, method: Method) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.name == name && r.factor == factor && r.method == method)
            .map(|r| r.rmse)
    }

    /// `name,factor,method,rmse` with RMSE printed to 6 decimals.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        w.write_record(["name", "factor", "method", "rmse"])
            .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.name.clone(),
                r.factor.to_string(),
                r.method.as_str().to_owned(),
                format!("{:.6}", r.rmse),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("<csv>", std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// One row per image and factor, one column per method. Published
    /// reference values for images of the same name follow in a second
    /// table.
    pub fn to_markdown(&self) -> String {
        let mut methods: Vec<Method> = self.records.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();
        let mut keys: Vec<(String, usize)> = Vec::new();
        for r in &self.records {
            let key = (r.name.clone(), r.factor);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }

        let mut out = String::from("| image | factor |");
        for m in &methods {
            let _ = write!(out, " {} |", m.as_str());
        }
        out.push_str("\n|---|---|");
        out.push_str(&"---|".repeat(methods.len()));
        out.push('\n');
        for (name, factor) in &keys {
            let _ = write!(out, "| {name} | x{factor} |");
            for m in &methods {
                match self.get(name, *factor, *m) {
                    Some(v) => {
                        let _ = write!(out, " {v:.3} |");
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }

        let refs: Vec<ReferenceRow> = reference_rows()
            .into_iter()
            .filter(|r| {
                keys.iter()
                    .any(|(n, f)| n.eq_ignore_ascii_case(&r.image) && Some(*f) == r.factor)
            })
            .collect();
        if !refs.is_empty() {
            out.push_str("\nPublished reference values (different noise realization; not comparable bit-for-bit):\n\n");
            out.push_str("| dataset | image | factor | method | rmse |\n|---|---|---|---|---|\n");
            for r in refs {
                let _ = writeln!(
                    out,
                    "| {} | {} | x{} | {} | {:.2} |",
                    r.dataset,
                    r.image,
                    r.factor.unwrap_or(0),
                    r.method,
                    r.rmse
                );
            }
        }

        if !self.failures.is_empty() {
            out.push_str("\nSkipped entries:\n\n");
            for (name, reason) in &self.failures {
                let _ = writeln!(out, "- {name}: {reason}");
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub dataset: String,
    pub image: String,
    pub factor: Option<usize>,
    pub method: String,
    pub rmse: f64,
    pub provenance: String,
}

/// Parses [`REFERENCE_RMSE_CSV`].
pub fn reference_rows() -> Vec<ReferenceRow> {
    let mut reader = csv::Reader::from_reader(REFERENCE_RMSE_CSV.as_bytes());
    reader
        .records()
        .filter_map(|rec| rec.ok())
        .filter_map(|rec| {
            Some(ReferenceRow {
                dataset: rec.get(0)?.to_owned(),
                image: rec.get(1)?.to_owned(),
                factor: rec.get(2)?.parse().ok(),
                method: rec.get(3)?.to_owned(),
                rmse: rec.get(4)?.parse().ok()?,
                provenance: rec.get(5)?.to_owned(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub factors: Vec<usize>,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Noise sigma at the maximum depth of each scene.
    pub noise_sigma: f64,
    pub params: SolverParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            factors: vec![2, 4],
            methods: vec![Method::Bicubic, Method::Ours, Method::Gfl0],
            seed: 7,
            noise_sigma: 2.0,
            params: SolverParams::default(),
        }
    }
}

/// One dataset entry: ground truth and its guide.
#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub gt: DepthImage,
    pub guide: GuideImage,
}

const GT_NAMES: [&str; 2] = ["gt.pfm", "gt.pgm"];
const GUIDE_NAMES: [&str; 3] = ["guide.png", "guide.pgm", "guide.pfm"];

fn find_file(dir: &Path, names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

/// Loads one `<name>/` directory of a dataset.
pub fn load_scene(dir: &Path) -> Result<Scene> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let gt_path = find_file(dir, &GT_NAMES).ok_or_else(|| {
        Error::InvalidParameter(format!("{} has no gt.pfm or gt.pgm", dir.display()))
    })?;
    let guide_path = find_file(dir, &GUIDE_NAMES).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "{} has no guide.png, guide.pgm or guide.pfm",
            dir.display()
        ))
    })?;
    let gt = read_depth_auto(&gt_path)?;
    let guide = read_guide_auto(&guide_path)?;
    if gt.dims() != guide.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{name}: gt {}x{} vs guide {}x{}",
            gt.width(),
            gt.height(),
            guide.width(),
            guide.height()
        )));
    }
    Ok(Scene { name, gt, guide })
}

/// Evaluates every configured method and factor on one scene. Ground truth
/// and guide are cropped to a multiple of the factor first.
pub fn evaluate_scene(scene: &Scene, config: &BenchConfig) -> Result<Vec<EvalRecord>> {
    let mut records = Vec::new();
    for &factor in &config.factors {
        let w = scene.gt.width() / factor * factor;
        let h = scene.gt.height() / factor * factor;
        if w == 0 || h == 0 {
            return Err(Error::InvalidParameter(format!(
                "{} is smaller than factor {factor}",
                scene.name
            )));
        }
        let gt = scene.gt.crop(0, 0, w, h)?;
        let guide = GuideImage::from_plane(scene.guide.as_plane().crop(0, 0, w, h)?)?;
        let lr = simulate_lr(&gt, factor, config.noise_sigma, config.seed)?;
        for &method in &config.methods {
            let pred = match method {
                Method::Bicubic => resize_to(&lr, w, h)?,
                Method::Ours => upsample(&lr, &guide, factor, &config.params, None)?.0,
                Method::Gfl0 => upsample(&lr, &guide, factor, &config.params.gfl0(), None)?.0,
            };
            records.push(EvalRecord {
                name: scene.name.clone(),
                factor,
                method,
                rmse: rmse(&pred, &gt, None)?,
            });
        }
    }
    Ok(records)
}

/// Runs the benchmark over every subdirectory of `dataset_dir` in name
/// order. Entries that fail to load or evaluate are recorded in
/// [`EvalReport::failures`] and the run continues.
pub fn run_benchmark(dataset_dir: &Path, config: &BenchConfig) -> Result<EvalReport> {
    let entries = std::fs::read_dir(dataset_dir).map_err(|e| Error::io(dataset_dir, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();

    let mut report = EvalReport::default();
    for dir in dirs {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match load_scene(&dir).and_then(|scene| evaluate_scene(&scene, config)) {
            Ok(records) => report.records.extend(records),
            Err(e) => report.failures.push((name, e.to_string())),
        }
    }
    Ok(report)
}
