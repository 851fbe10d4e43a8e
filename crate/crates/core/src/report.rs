//! Run configuration, the analysis pipeline and the JSON report.
//!
//! A [`RunConfig`] fixes the field, window, tolerances, budgets and seed.
//! With the same config the report is byte-identical whatever the number of
//! worker threads: wall-clock timings are left out unless asked for, and the
//! output paths and worker count are not echoed.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::builtins::FieldSpec;
use crate::cassini::{ground_truth, CassiniParams, GroundTruth};
use crate::contour::{level_curve, ContourOptions, LevelCurve};
use crate::critical::{find_critical_points_with, CriticalOptions, CriticalSetReport};
use crate::curvature::{classify_levels_with, LevelClass};
use crate::error::{invalid, Error, Result};
use crate::field::{is_positive_semidefinite, GridSpec, ScalarField2};
use crate::gradient_map::{
    gradient_collision_scan_with, monotonicity_check_with, valence_bounds, InjectivityReport,
    MonotonicityReport, ScanOptions, ValenceBounds,
};
use crate::hess_region::{complement_bounded, h_max, hess_plus_mask, overlevel_mask, HMaxEstimate, RegionMask};
use crate::hess_region::DEFAULT_MARGIN_CELLS;
use crate::sampling::DEFAULT_SEED;
use crate::truncation::{LevelBracket, LevelProber, ProbeOptions};

pub const SCHEMA_VERSION: &str = "1.0.0";

/// Environment variable read for the worker count when no flag is given.
pub const WORKERS_ENV: &str = "TRUNCVX_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub newton_tol: f64,
    /// Absolute; `1e-4` times the bracket width when unset.
    pub bisect_tol: Option<f64>,
    /// Absolute; derived from the raster scale when unset.
    pub violation_tol: Option<f64>,
    pub image_tol: f64,
    pub regularity_tol: f64,
    /// Relative bound on `|f − c|` at level-curve vertices.
    pub curve_tol: f64,
    /// Absolute; derived from `max‖∇f‖` and the window size when unset.
    pub mono_tol: Option<f64>,
    pub tol_compare: f64,
    pub psd_slack: f64,
    pub degen_tol: f64,
    /// Positive-definiteness margin of the `Hess⁺` mask; `0` means strict minors.
    pub hess_eps: f64,
    /// Slack in `h_max ≥ ν_max`.
    pub nu_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            bisect_tol: None,
            violation_tol: None,
            image_tol: 1e-4,
            regularity_tol: 1e-8,
            curve_tol: 1e-9,
            mono_tol: None,
            tol_compare: 1e-6,
            psd_slack: 1e-6,
            degen_tol: 1e-10,
            hess_eps: 0.0,
            nu_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub pair_samples: usize,
    pub seg_samples: usize,
    pub scan_samples: usize,
    pub refine_iters: usize,
    pub probe_levels: usize,
    pub mono_pairs: usize,
    pub max_candidates: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            pair_samples: 4000,
            seg_samples: 3,
            scan_samples: 200_000,
            refine_iters: 60,
            probe_levels: 8,
            mono_pairs: 20_000,
            max_candidates: 2000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub json: Option<PathBuf>,
    pub pgm: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldSpec,
    /// Defaults to `[-3s, 3s]²` with 600 × 600 cells, where `s` is the
    /// Cassini parameter or 1.
    pub window: Option<GridSpec>,
    pub tolerances: Tolerances,
    pub budgets: Budgets,
    pub seed: u64,
    /// Defaults to `[min f, min f + ½(min_∂ f − min f)]` over the window.
    pub sql_bracket: Option<[f64; 2]>,
    pub scl_bracket: Option<[f64; 2]>,
    /// Levels for the classification table. Empty means a default ladder.
    pub levels: Vec<f64>,
    /// The injectivity scan runs on `{f > scl_hi + scan_margin · max(1, |scl_hi|)}`.
    pub scan_margin: f64,
    #[serde(skip_serializing)]
    pub outputs: Outputs,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    #[serde(skip_serializing)]
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            field: FieldSpec::Cassini { a: 1.0 },
            window: None,
            tolerances: Tolerances::default(),
            budgets: Budgets::default(),
            seed: DEFAULT_SEED,
            sql_bracket: None,
            scl_bracket: None,
            levels: Vec::new(),
            scan_margin: 1.0 / 60.0,
            outputs: Outputs::default(),
            workers: None,
            timings: false,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn scale(&self) -> f64 {
        match self.field {
            FieldSpec::Cassini { a } => a,
            FieldSpec::CassiniG { b } => b,
            _ => 1.0,
        }
    }

    pub fn resolved_window(&self) -> Result<GridSpec> {
        match self.window {
            Some(g) => {
                g.validate()?;
                Ok(g)
            }
            None => GridSpec::square(3.0 * self.scale().abs(), 600),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let required = [
            ("newton_tol", t.newton_tol),
            ("image_tol", t.image_tol),
            ("regularity_tol", t.regularity_tol),
            ("curve_tol", t.curve_tol),
            ("tol_compare", t.tol_compare),
            ("psd_slack", t.psd_slack),
            ("degen_tol", t.degen_tol),
            ("nu_tol", t.nu_tol),
        ];
        let optional = [
            ("bisect_tol", t.bisect_tol),
            ("violation_tol", t.violation_tol),
            ("mono_tol", t.mono_tol),
        ];
        for (name, v) in required
            .into_iter()
            .chain(optional.into_iter().filter_map(|(n, v)| v.map(|v| (n, v))))
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("tolerance {name} must be finite and > 0, got {v}")));
            }
        }
        if !(t.hess_eps >= 0.0 && t.hess_eps.is_finite()) {
            return Err(invalid(format!("tolerance hess_eps must be finite and >= 0, got {}", t.hess_eps)));
        }
        let b = &self.budgets;
        let minima = [
            ("pair_samples", b.pair_samples, 1),
            ("seg_samples", b.seg_samples, 3),
            ("scan_samples", b.scan_samples, 2),
            ("probe_levels", b.probe_levels, 1),
            ("mono_pairs", b.mono_pairs, 1),
            ("max_candidates", b.max_candidates, 1),
        ];
        for (name, v, min) in minima {
            if v < min {
                return Err(invalid(format!("budget {name} must be >= {min}, got {v}")));
            }
        }
        for (name, br) in [("sql_bracket", self.sql_bracket), ("scl_bracket", self.scl_bracket)] {
            if let Some([lo, hi]) = br {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid(format!("{name} must satisfy lo < hi, got [{lo}, {hi}]")));
                }
            }
        }
        if !(self.scan_margin >= 0.0) {
            return Err(invalid("scan_margin must be >= 0"));
        }
        if self.levels.iter().any(|c| !c.is_finite()) {
            return Err(invalid("levels must be finite"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be >= 1"));
        }
        self.resolved_window()?;
        Ok(())
    }

    fn probe_options(&self) -> ProbeOptions {
        ProbeOptions {
            pair_samples: self.budgets.pair_samples,
            seg_samples: self.budgets.seg_samples,
            probe_levels: self.budgets.probe_levels,
            seed: self.seed,
            violation_tol: self.tolerances.violation_tol,
        }
    }

    fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            samples: self.budgets.scan_samples,
            image_tol: self.tolerances.image_tol,
            min_separation: None,
            max_candidates: self.budgets.max_candidates,
            seed: self.seed,
            ..ScanOptions::default()
        }
    }

    fn critical_options(&self) -> CriticalOptions {
        CriticalOptions {
            newton_tol: self.tolerances.newton_tol,
            degen_tol: self.tolerances.degen_tol,
            ..CriticalOptions::default()
        }
    }

    fn contour_options(&self) -> ContourOptions {
        ContourOptions {
            regularity_tol: self.tolerances.regularity_tol,
            ..ContourOptions::default()
        }
    }
}

/// Runs `job` on a pool of `workers` threads, or of `$TRUNCVX_WORKERS`, or on
/// the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let n = match workers {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n > 0)
                    .ok_or_else(|| invalid(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?,
            ),
            Err(_) => None,
        },
    };
    match n {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessRegionSummary {
    pub eps: f64,
    pub true_cells: usize,
    pub complement_cells: usize,
    pub complement_bounded: bool,
    pub h_max: Option<HMaxEstimate>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub sql_bracket_in: [f64; 2],
    pub scl_bracket_in: [f64; 2],
    pub sql: Option<LevelBracket>,
    pub scl: Option<LevelBracket>,
    pub sql_error: Option<String>,
    pub scl_error: Option<String>,
    pub violation_tol: f64,
}

/// One checked inequality. `holds` is `None` when its hypotheses are not met
/// on the window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityVerdict {
    pub name: String,
    pub statement: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub tol: f64,
    pub holds: Option<bool>,
    pub note: Option<String>,
}

impl InequalityVerdict {
    fn check(name: &str, statement: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            lhs: Some(lhs),
            rhs: Some(rhs),
            tol,
            holds: Some(lhs <= rhs + tol),
            note: None,
        }
    }

    fn skipped(name: &str, statement: &str, tol: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            lhs: None,
            rhs: None,
            tol,
            holds: None,
            note: Some(note.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub library_version: String,
    pub config: RunConfig,
    pub window: GridSpec,
    pub hess_region: HessRegionSummary,
    pub critical: CriticalSetReport,
    pub thresholds: Thresholds,
    pub inequalities: Vec<InequalityVerdict>,
    pub inequalities_ok: bool,
    pub levels: Vec<LevelClass>,
    pub injectivity: Option<InjectivityReport>,
    pub monotonicity: Option<MonotonicityReport>,
    pub valence: Option<ValenceBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<StageTiming>>,
}

impl AnalysisReport {
    /// `0` when every applicable inequality holds, `2` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.inequalities_ok {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

struct Stopwatch {
    on: bool,
    last: Instant,
    stages: Vec<StageTiming>,
}

impl Stopwatch {
    fn new(on: bool) -> Self {
        Self {
            on,
            last: Instant::now(),
            stages: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        if self.on {
            self.stages.push(StageTiming {
                stage: stage.into(),
                seconds: (now - self.last).as_secs_f64(),
            });
        }
        self.last = now;
    }

    fn finish(self) -> Option<Vec<StageTiming>> {
        self.on.then_some(self.stages)
    }
}

/// Default bracket `[min f, min f + ½(min over the border − min f)]`.
fn default_bracket(values: &[f64], grid: &GridSpec) -> [f64; 2] {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let border = (0..grid.len())
        .filter(|&k| {
            let (i, j) = grid.cell_coords(k);
            i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1
        })
        .map(|k| values[k])
        .fold(f64::INFINITY, f64::min);
    let hi = lo + 0.5 * (border - lo);
    if hi > lo {
        [lo, hi]
    } else {
        [lo, lo + 1.0]
    }
}

fn default_levels(spec: &FieldSpec, bracket: [f64; 2]) -> Vec<f64> {
    match spec {
        FieldSpec::Cassini { a } => {
            let a4 = a.powi(4);
            [-0.5, -0.1, 0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0].iter().map(|k| k * a4).collect()
        }
        _ => (0..=4).map(|k| bracket[0] + (bracket[1] - bracket[0]) * k as f64 / 4.0).collect(),
    }
}

pub fn cmd_analyze(config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let field = config.field.build()?;
    with_workers(config.workers, || analyze(config, field.as_ref()))?
}

fn analyze(config: &RunConfig, field: &dyn ScalarField2) -> Result<AnalysisReport> {
    let grid = config.resolved_window()?;
    let tol = &config.tolerances;
    let mut clock = Stopwatch::new(config.timings);

    let hess = hess_plus_mask(field, &grid, tol.hess_eps)?;
    let bounded = complement_bounded(&hess, DEFAULT_MARGIN_CELLS)?;
    let (h, note) = match h_max(field, &hess, config.budgets.refine_iters) {
        Ok(h) => (Some(h), None),
        Err(Error::EmptyComplement) => (None, Some("Hessian positive definite on the whole window".to_owned())),
        Err(e) => return Err(e),
    };
    let hess_region = HessRegionSummary {
        eps: tol.hess_eps,
        true_cells: hess.count_true(),
        complement_cells: hess.cells.len() - hess.count_true(),
        complement_bounded: bounded,
        h_max: h,
        note,
    };
    clock.lap("hess_region");

    let critical = find_critical_points_with(field, &grid, &config.critical_options())?;
    clock.lap("critical_set");

    let prober = LevelProber::new(field, &grid, &config.probe_options())?;
    let values = crate::sampling::raster_values(field, &grid);
    let fallback = default_bracket(&values, &grid);
    let sql_in = config.sql_bracket.unwrap_or(fallback);
    let scl_in = config.scl_bracket.unwrap_or(fallback);
    let bisect = |b: [f64; 2]| tol.bisect_tol.unwrap_or(1e-4 * (b[1] - b[0]));
    let split = |r: Result<LevelBracket>| match r {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (sql, sql_error) = split(prober.estimate_sql((sql_in[0], sql_in[1]), bisect(sql_in)));
    let (scl, scl_error) = split(prober.estimate_scl((scl_in[0], scl_in[1]), bisect(scl_in)));
    let thresholds = Thresholds {
        sql_bracket_in: sql_in,
        scl_bracket_in: scl_in,
        sql,
        scl,
        sql_error,
        scl_error,
        violation_tol: prober.violation_tol(),
    };
    clock.lap("thresholds");

    let levels_in = if config.levels.is_empty() {
        default_levels(&config.field, fallback)
    } else {
        config.levels.clone()
    };
    let levels = classify_levels_with(field, &levels_in, &grid, &config.contour_options())?;
    clock.lap("levels");

    let scl_hi = thresholds.scl.as_ref().map(|b| b.hi);
    let (injectivity, monotonicity, valence) = match scl_hi {
        Some(s) => {
            let level = s + config.scan_margin * s.abs().max(1.0);
            let over = overlevel_mask(field, &grid, level)?;
            let inj = if over.count_true() > 0 {
                Some(gradient_collision_scan_with(field, &over, &config.scan_options())?)
            } else {
                None
            };
            clock.lap("injectivity");
            let mono = monotonicity_check_with(field, s, &grid, config.budgets.mono_pairs, tol.mono_tol, config.seed).ok();
            clock.lap("monotonicity");
            let val = valence_bounds(field, &hess, s, &critical, &config.scan_options())?;
            clock.lap("valence");
            (inj, mono, Some(val))
        }
        None => (None, None, None),
    };

    let inequalities = inequality_suite(config, field, &grid, &hess_region, &critical, &thresholds, &levels);
    let inequalities_ok = inequalities.iter().all(|v| v.holds != Some(false));
    if let Some(v) = &valence {
        if v.scan_multiplicity > v.hi_conjectural {
            eprintln!(
                "warning: gradient multiplicity {} exceeds the conjectural valence bound {}",
                v.scan_multiplicity, v.hi_conjectural
            );
        }
    }

    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION.into(),
        library_version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        window: grid,
        hess_region,
        critical,
        thresholds,
        inequalities,
        inequalities_ok,
        levels,
        injectivity,
        monotonicity,
        valence,
        timings: clock.finish(),
    })
}

fn inequality_suite(
    config: &RunConfig,
    field: &dyn ScalarField2,
    grid: &GridSpec,
    hess: &HessRegionSummary,
    critical: &CriticalSetReport,
    th: &Thresholds,
    levels: &[LevelClass],
) -> Vec<InequalityVerdict> {
    let tol = &config.tolerances;
    let mut out = Vec::new();

    const NU: &str = "nu_max <= h_max";
    let nu_stmt = "largest critical value is at most the maximum of f off Hess+";
    out.push(match (&hess.h_max, critical.nu_max) {
        (Some(h), Some(nu)) if hess.complement_bounded => InequalityVerdict::check(NU, nu_stmt, nu, h.value, tol.nu_tol),
        (None, _) => InequalityVerdict::skipped(NU, nu_stmt, tol.nu_tol, "complement of Hess+ is empty"),
        (_, None) => InequalityVerdict::skipped(NU, nu_stmt, tol.nu_tol, "no critical point in the window"),
        _ => InequalityVerdict::skipped(NU, nu_stmt, tol.nu_tol, "complement of Hess+ reaches the window border"),
    });

    const QC: &str = "sql <= scl";
    let qc_stmt = "quasiconvexity threshold is at most the convexity threshold";
    out.push(match (&th.sql, &th.scl) {
        (Some(q), Some(c)) => InequalityVerdict::check(QC, qc_stmt, q.hi, c.hi, q.bisect_tol.max(c.bisect_tol)),
        _ => InequalityVerdict::skipped(QC, qc_stmt, 0.0, "a threshold bracket is unavailable"),
    });

    const SW: &str = "scl <= max(sql, h_max)";
    let sw_stmt = "convexity threshold is bounded by the quasiconvexity threshold and h_max";
    let h_val = hess.h_max.map(|h| h.value).unwrap_or(f64::NEG_INFINITY);
    out.push(match (&th.sql, &th.scl) {
        (Some(q), Some(c)) if hess.complement_bounded || hess.h_max.is_none() => {
            InequalityVerdict::check(SW, sw_stmt, c.hi, q.hi.max(h_val), tol.tol_compare)
        }
        (Some(_), Some(_)) => InequalityVerdict::skipped(SW, sw_stmt, tol.tol_compare, "complement of Hess+ reaches the window border"),
        _ => InequalityVerdict::skipped(SW, sw_stmt, tol.tol_compare, "a threshold bracket is unavailable"),
    });

    const PSD: &str = "overlevel within Hess+0";
    let psd_stmt = "every cell with f above the convexity threshold has a positive semidefinite Hessian";
    out.push(match &th.scl {
        Some(c) => {
            let level = c.hi + config.scan_margin * c.hi.abs().max(1.0);
            let bad = (0..grid.len())
                .map(|k| grid.center_of(k))
                .filter(|&p| field.value(p) > level)
                .filter(|&p| !is_positive_semidefinite(&field.hessian(p), tol.psd_slack).unwrap_or(false))
                .count();
            InequalityVerdict::check(PSD, psd_stmt, bad as f64, 0.0, 0.0)
        }
        None => InequalityVerdict::skipped(PSD, psd_stmt, tol.psd_slack, "convexity threshold unavailable"),
    });

    const CT: &str = "level curve residual";
    let ct_stmt = "every level-curve vertex satisfies |f - c| <= curve_tol (1 + |c|)";
    let worst = levels
        .iter()
        .map(|l| l.max_residual / (1.0 + l.level.abs()))
        .fold(0.0, f64::max);
    out.push(InequalityVerdict::check(CT, ct_stmt, worst, tol.curve_tol, 0.0));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelsOutput {
    pub window: GridSpec,
    pub rows: Vec<LevelClass>,
}

pub fn cmd_levels(config: &RunConfig, c_values: &[f64]) -> Result<(LevelsOutput, Vec<LevelCurve>)> {
    config.validate()?;
    let field = config.field.build()?;
    let grid = config.resolved_window()?;
    with_workers(config.workers, || -> Result<_> {
        let rows = classify_levels_with(field.as_ref(), c_values, &grid, &config.contour_options())?;
        let curves = c_values
            .iter()
            .map(|&c| level_curve(field.as_ref(), c, &grid))
            .collect::<Result<Vec<_>>>()?;
        Ok((LevelsOutput { window: grid, rows }, curves))
    })?
}

pub fn levels_table(rows: &[LevelClass]) -> String {
    let mut s = format!(
        "{:>12}  {:>8}  {:>7}  {:>10}  {:>13}  {:>7}\n",
        "level", "nonempty", "regular", "components", "sign_constant", "verdict"
    );
    for r in rows {
        s.push_str(&format!(
            "{:>12}  {:>8}  {:>7}  {:>10}  {:>13}  {:>7}\n",
            r.level, r.nonempty, r.regular, r.components, r.curvature_sign_constant, r.verdict
        ));
    }
    s
}

/// Collision scan on `{f > level}`; also returns the mask for overlays.
pub fn cmd_gradient_scan(config: &RunConfig, level: f64) -> Result<(InjectivityReport, RegionMask)> {
    config.validate()?;
    let field = config.field.build()?;
    let grid = config.resolved_window()?;
    with_workers(config.workers, || -> Result<_> {
        let over = overlevel_mask(field.as_ref(), &grid, level)?;
        if over.count_true() == 0 {
            return Err(invalid(format!("overlevel set {{f > {level}}} is empty in the window")));
        }
        Ok((gradient_collision_scan_with(field.as_ref(), &over, &config.scan_options())?, over))
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessMaskOutput {
    pub window: GridSpec,
    pub eps: f64,
    pub true_cells: usize,
    pub complement_bounded: bool,
    pub h_max: Option<HMaxEstimate>,
}

pub fn cmd_hess_mask(config: &RunConfig) -> Result<(HessMaskOutput, RegionMask)> {
    config.validate()?;
    let field = config.field.build()?;
    let grid = config.resolved_window()?;
    let eps = config.tolerances.hess_eps;
    with_workers(config.workers, || -> Result<_> {
        let mask = hess_plus_mask(field.as_ref(), &grid, eps)?;
        let h = match h_max(field.as_ref(), &mask, config.budgets.refine_iters) {
            Ok(h) => Some(h),
            Err(Error::EmptyComplement) => None,
            Err(e) => return Err(e),
        };
        let out = HessMaskOutput {
            window: grid,
            eps,
            true_cells: mask.count_true(),
            complement_bounded: complement_bounded(&mask, DEFAULT_MARGIN_CELLS)?,
            h_max: h,
        };
        Ok((out, mask))
    })?
}

pub fn cmd_critical(config: &RunConfig) -> Result<CriticalSetReport> {
    config.validate()?;
    let field = config.field.build()?;
    let grid = config.resolved_window()?;
    with_workers(config.workers, || find_critical_points_with(field.as_ref(), &grid, &config.critical_options()))?
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoRow {
    pub quantity: String,
    pub closed_form: f64,
    pub recovered: Option<f64>,
    pub abs_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub ground_truth: GroundTruth,
    pub rows: Vec<DemoRow>,
}

/// Closed-form constants of the Cassini field next to the values recovered
/// by the numerical pipeline.
pub fn cmd_cassini_demo(config: &RunConfig) -> Result<DemoReport> {
    let a = match config.field {
        FieldSpec::Cassini { a } => a,
        _ => return Err(invalid("cassini-demo needs the cassini field")),
    };
    let truth = ground_truth(CassiniParams::new(a)?);
    let report = cmd_analyze(config)?;
    let row = |q: &str, truth: f64, got: Option<f64>| DemoRow {
        quantity: q.into(),
        closed_form: truth,
        recovered: got,
        abs_error: got.map(|g| (g - truth).abs()),
    };
    let min = report.critical.points.iter().map(|c| c.value).reduce(f64::min);
    let mid = |b: &Option<LevelBracket>| b.as_ref().map(|b| 0.5 * (b.lo + b.hi));
    Ok(DemoReport {
        rows: vec![
            row("min_value", truth.min_value, min),
            row("nu_max", truth.nu_max, report.critical.nu_max),
            row("h_max", truth.h_max, report.hess_region.h_max.map(|h| h.value)),
            row("sql", truth.sql, mid(&report.thresholds.sql)),
            row("scl", truth.scl, mid(&report.thresholds.scl)),
        ],
        ground_truth: truth,
    })
}

pub fn demo_table(d: &DemoReport) -> String {
    let mut s = format!("{:<10}  {:>14}  {:>14}  {:>10}\n", "quantity", "closed form", "recovered", "abs error");
    for r in &d.rows {
        let got = r.recovered.map_or("n/a".to_owned(), |v| format!("{v:.8}"));
        let err = r.abs_error.map_or("n/a".to_owned(), |v| format!("{v:.2e}"));
        s.push_str(&format!("{:<10}  {:>14.8}  {:>14}  {:>10}\n", r.quantity, r.closed_form, got, err));
    }
    s
}

/// Shared field handle for callers that build several analyses.
pub fn build_field(config: &RunConfig) -> Result<Arc<dyn ScalarField2>> {
    config.field.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(field: FieldSpec) -> RunConfig {
        RunConfig {
            field,
            window: Some(GridSpec::square(3.0, 150).unwrap()),
            budgets: Budgets {
                scan_samples: 20_000,
                mono_pairs: 2000,
                ..Budgets::default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_round_trip_and_validation() {
        let c: RunConfig = serde_json::from_str(r#"{"field":{"name":"cassini","a":2.0},"seed":7}"#).unwrap();
        assert_eq!(c.field, FieldSpec::Cassini { a: 2.0 });
        assert_eq!(c.resolved_window().unwrap(), GridSpec::square(6.0, 600).unwrap());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
        let mut bad = RunConfig::default();
        bad.tolerances.image_tol = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = RunConfig::default();
        bad.budgets.seg_samples = 2;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quadratic_report() {
        let r = cmd_analyze(&small(FieldSpec::Quadratic)).unwrap();
        assert!(r.hess_region.h_max.is_none());
        assert!(r.inequalities_ok);
        assert_eq!(r.exit_code(), 0);
        let inj = r.injectivity.as_ref().unwrap();
        assert!(inj.collisions.is_empty());
        assert!(r.thresholds.scl.as_ref().unwrap().below_lower_end);
    }

    #[test]
    fn cassini_report_small() {
        let r = cmd_analyze(&small(FieldSpec::Cassini { a: 1.0 })).unwrap();
        assert!(r.inequalities_ok, "{:#?}", r.inequalities);
        assert!((r.hess_region.h_max.unwrap().value - 3.0).abs() < 1e-3);
        assert!((r.thresholds.scl.as_ref().unwrap().hi - 3.0).abs() < 1e-2);
        assert!(r.timings.is_none());
        assert!(!r.to_json().unwrap().contains("timings"));
    }

    #[test]
    fn saddle_has_no_thresholds() {
        let r = cmd_analyze(&small(FieldSpec::Saddle)).unwrap();
        assert!(r.thresholds.sql.is_none() && r.thresholds.sql_error.is_some());
        assert_eq!(r.exit_code(), 0);
    }
}
