use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use truncvx::builtins::FieldSpec;
use truncvx::error::{Error, Result};
use truncvx::field::{GridSpec, Polynomial};
use truncvx::report::{self, RunConfig};
use truncvx::svg;

#[derive(Parser)]
#[command(name = "truncvx", version, about = "Convexity thresholds of truncations of planar scalar fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: Hess+ region, critical set, thresholds, levels, injectivity.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Write the Hess+ mask as PGM.
        #[arg(long)]
        pgm: Option<PathBuf>,
        /// Write the classified level curves as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        sql_bracket: Option<Vec<f64>>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        scl_bracket: Option<Vec<f64>>,
        /// Comma-separated levels for the classification table.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        levels: Option<Vec<f64>>,
    },
    /// Classify level sets f = c.
    Levels {
        #[command(flatten)]
        common: Common,
        /// Comma-separated levels.
        #[arg(long = "c", value_delimiter = ',', allow_hyphen_values = true, default_value = "")]
        c_values: Vec<String>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Search for gradient collisions on {f > level}.
    GradientScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        level: f64,
        /// Write the region and collision pairs as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Rasterize Hess+ and estimate h_max.
    HessMask {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Locate and classify critical points.
    Critical {
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form Cassini constants next to the recovered values.
    CassiniDemo {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// cassini, cassini-g, quadratic, saddle, exp-sum or polynomial.
    #[arg(long)]
    field: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Polynomial monomials as `i,j,c;i,j,c;...`.
    #[arg(long, allow_hyphen_values = true)]
    poly: Option<String>,
    #[arg(long, num_args = 4, value_names = ["XMIN", "XMAX", "YMIN", "YMAX"], allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to $TRUNCVX_WORKERS or all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Add wall-clock seconds per stage to the report.
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(terms) = &self.poly {
            if self.field.as_deref().is_some_and(|f| f != "polynomial") {
                return Err(Error::InvalidInput("--poly only applies to the polynomial field".into()));
            }
            cfg.field = FieldSpec::Polynomial {
                terms: Polynomial::parse(terms)?.terms,
            };
        } else if let Some(name) = &self.field {
            cfg.field = FieldSpec::from_name(name, self.a.or(self.b).or(Some(1.0)))?;
        } else {
            match (&mut cfg.field, self.a, self.b) {
                (FieldSpec::Cassini { a }, Some(v), _) => *a = v,
                (FieldSpec::CassiniG { b }, _, Some(v)) => *b = v,
                (_, None, None) => {}
                _ => return Err(Error::InvalidInput("--a/--b do not apply to the configured field".into())),
            }
        }
        if self.window.is_some() || self.nx.is_some() || self.ny.is_some() {
            let current = cfg.resolved_window()?;
            let mut g = match &self.window {
                Some(w) => GridSpec::new(w[0], w[1], w[2], w[3], current.nx, current.ny)?,
                None => current,
            };
            g.nx = self.nx.unwrap_or(g.nx);
            g.ny = self.ny.unwrap_or(g.ny);
            g.validate()?;
            cfg.window = Some(g);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.json.is_some() {
            cfg.outputs.json = self.json.clone();
        }
        cfg.timings |= self.timings;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn pair(v: Option<Vec<f64>>) -> Option<[f64; 2]> {
    v.map(|v| [v[0], v[1]])
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze {
            common,
            pgm,
            svg: svg_path,
            sql_bracket,
            scl_bracket,
            levels,
        } => {
            let mut cfg = common.config()?;
            if let Some(b) = pair(sql_bracket) {
                cfg.sql_bracket = Some(b);
            }
            if let Some(b) = pair(scl_bracket) {
                cfg.scl_bracket = Some(b);
            }
            if let Some(l) = levels {
                cfg.levels = l;
            }
            cfg.outputs.pgm = pgm.or(cfg.outputs.pgm);
            cfg.outputs.svg = svg_path.or(cfg.outputs.svg);
            let r = report::cmd_analyze(&cfg)?;
            if let Some(p) = &cfg.outputs.pgm {
                report::cmd_hess_mask(&cfg)?.1.write_pgm(p)?;
            }
            if let Some(p) = &cfg.outputs.svg {
                let levels: Vec<f64> = r.levels.iter().map(|l| l.level).collect();
                let (_, curves) = report::cmd_levels(&cfg, &levels)?;
                std::fs::write(p, svg::level_curves_svg(&curves, &r.window))?;
            }
            emit(&r, cfg.outputs.json.as_deref())?;
            for v in r.inequalities.iter().filter(|v| v.holds == Some(false)) {
                eprintln!("inequality failed: {} (lhs {:?}, rhs {:?}, tol {})", v.name, v.lhs, v.rhs, v.tol);
            }
            Ok(r.exit_code() as u8)
        }
        Command::Levels { common, c_values, svg: svg_path } => {
            let cfg = common.config()?;
            let cs = c_values
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad level {s:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            let (out, curves) = report::cmd_levels(&cfg, &cs)?;
            print!("{}", report::levels_table(&out.rows));
            if let Some(p) = &common.json {
                emit(&out, Some(p))?;
            }
            if let Some(p) = svg_path {
                std::fs::write(p, svg::level_curves_svg(&curves, &out.window))?;
            }
            Ok(0)
        }
        Command::GradientScan { common, level, svg: svg_path } => {
            let cfg = common.config()?;
            let (rep, mask) = report::cmd_gradient_scan(&cfg, level)?;
            if let Some(p) = svg_path {
                std::fs::write(p, svg::collision_overlay_svg(&mask, &rep.collisions))?;
            }
            emit(&rep, cfg.outputs.json.as_deref())?;
            Ok(0)
        }
        Command::HessMask { common, pgm } => {
            let cfg = common.config()?;
            let (out, mask) = report::cmd_hess_mask(&cfg)?;
            if let Some(p) = pgm {
                mask.write_pgm(&p)?;
            }
            emit(&out, cfg.outputs.json.as_deref())?;
            Ok(0)
        }
        Command::Critical { common } => {
            let cfg = common.config()?;
            emit(&report::cmd_critical(&cfg)?, cfg.outputs.json.as_deref())?;
            Ok(0)
        }
        Command::CassiniDemo { common } => {
            let cfg = common.config()?;
            let demo = report::cmd_cassini_demo(&cfg)?;
            print!("{}", report::demo_table(&demo));
            if let Some(p) = &common.json {
                emit(&demo, Some(p))?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
