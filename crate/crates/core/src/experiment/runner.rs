//! Executes a config and writes its artifacts.
//!
//! Every file is first written as `<name>.partial` and renamed once complete.
//! Result files depend only on the config and seed; `manifest.json` also
//! records the wall time.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cz::{
    build_dyadic_system, build_full_dyadic_system, decompose, smooth_bad_part, verify_properties, SmoothingMode,
};
use crate::error::{Error, Result};
use crate::experiment::config::{Experiment, ExperimentConfig, FamilySpec, RegularizationSpec, SmoothingSpec};
use crate::experiment::functions::random_band_limited;
use crate::experiment::weak::{weak11_sweep, TestFamily, Weak11Params};
use crate::fourier::{forward_transform, inverse_transform, plancherel_energy, GridFunction};
use crate::hormander::{estimate_seminorm, SeminormDesign};
use crate::multiplier::{apply_multiplier, envelope_slope, kernel_csv, synthesize_kernel, verify_decay, Regularization};
use crate::numeric::splitmix64;
use crate::quadrature::{build_grid, QuadratureGrid};

/// Files written by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<String>,
    pub report: Value,
    /// False when a checked property failed (the CLI then exits with 4).
    pub passed: bool,
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let partial = dir.join(format!("{name}.partial"));
    fs::write(&partial, contents)?;
    fs::rename(&partial, dir.join(name))?;
    Ok(())
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn file(&mut self, name: &str, contents: &str) -> Result<()> {
        write_atomic(self.dir, name, contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.file(name, &s)
    }
}

/// Reads, validates and runs the config at `path`. `expected_kind` rejects
/// configs of another experiment kind; `seed` overrides the config's seed.
pub fn run_config(path: &Path, out_dir: &Path, seed: Option<u64>, expected_kind: Option<&str>) -> Result<RunOutcome> {
    let text = fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::parse_unvalidated(&text)?;
    if let Some(k) = expected_kind {
        if cfg.experiment.kind() != k {
            return Err(Error::invalid(format!(
                "config kind '{}' does not match the '{k}' subcommand",
                cfg.experiment.kind()
            )));
        }
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    cfg.validate()?;
    run_experiment(&cfg, out_dir)
}

/// Runs a validated config, writing result files and `manifest.json`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut w = Writer {
        dir: out_dir,
        files: Vec::new(),
    };
    let (report, passed) = match &cfg.experiment {
        Experiment::Plancherel { functions } => run_plancherel(cfg, *functions, &mut w)?,
        Experiment::Multiplier { symbol, input } => {
            let grid = grid_for(cfg)?;
            let sym = symbol.build(cfg.group, cfg.theta)?;
            let f = input.build(&grid, cfg.bandwidth, cfg.seed())?;
            let tf = apply_multiplier(&sym, &f, cfg.bandwidth)?;
            let decay = verify_decay(&sym, cfg.theta, cfg.bandwidth)?;
            let mut csv = String::from("L,C\n");
            for (l, c) in &decay.levels {
                let _ = writeln!(csv, "{l},{c}");
            }
            w.file("decay.csv", &csv)?;
            w.file("output.csv", &function_csv(&tf))?;
            let report = json!({
                "symbol": sym.label(),
                "decay_constant": decay.constant,
                "admissible": decay.admissible,
                "input_l2": f.l2_norm_sq().sqrt(),
                "output_l2": tf.l2_norm_sq().sqrt(),
                "output_sup": tf.sup_norm(),
            });
            (report, true)
        }
        Experiment::Kernel {
            symbol,
            regularization,
            window,
        } => {
            let grid = grid_for(cfg)?;
            let sym = symbol.build(cfg.group, cfg.theta)?;
            let reg = RegularizationSpec::resolve(regularization, cfg.bandwidth);
            let k = synthesize_kernel(&sym, &grid, cfg.bandwidth, reg)?;
            w.file("kernel.csv", &kernel_csv(&k))?;
            let slope = match window {
                Some([lo, hi]) => Some(envelope_slope(&k, (*lo, *hi))?),
                None => None,
            };
            let integral = k.kernel.integral();
            let report = json!({
                "symbol": k.label,
                "bandwidth": k.bandwidth,
                "regularization": regularization_json(&reg),
                "integral": [integral.re, integral.im],
                "envelope_slope": slope,
            });
            (report, true)
        }
        Experiment::Seminorm {
            symbol,
            regularization,
            r_grid,
            y_samples,
        } => {
            if cfg.group == crate::group::GroupId::Su2 {
                eprintln!("warning: SU(2) seminorm runs resynthesise the kernel once per sample and can be slow");
            }
            let grid = grid_for(cfg)?;
            let sym = symbol.build(cfg.group, cfg.theta)?;
            let reg = RegularizationSpec::resolve(regularization, cfg.bandwidth);
            let k = synthesize_kernel(&sym, &grid, cfg.bandwidth, reg)?;
            let design = SeminormDesign {
                theta: cfg.theta,
                r_grid: r_grid.radii()?,
                y_samples: *y_samples,
                seed: cfg.seed(),
                bandwidth: Some(cfg.bandwidth),
            };
            let est = estimate_seminorm(&k.kernel, &design)?;
            w.file("seminorm.csv", &est.to_csv())?;
            let report = json!({
                "symbol": k.label,
                "value": est.value,
                "theta": est.theta,
                "y_samples": est.y_samples,
                "resolution": est.resolution,
                "regularization": regularization_json(&reg),
            });
            (report, true)
        }
        Experiment::Czd {
            input,
            altitudes,
            depth,
            smoothing,
        } => run_czd(cfg, input, altitudes, *depth, smoothing, &mut w)?,
        Experiment::Weak11 { symbol, family } => {
            let sym = symbol.build(cfg.group, cfg.theta)?;
            let family = match family {
                FamilySpec::ApproximateIdentity { epsilons } => TestFamily::ApproximateIdentity {
                    epsilons: epsilons.clone(),
                },
                FamilySpec::Atoms {
                    count,
                    min_radius,
                    max_radius,
                } => TestFamily::Atoms {
                    count: *count,
                    min_radius: *min_radius,
                    max_radius: *max_radius,
                },
            };
            let rep = weak11_sweep(&Weak11Params {
                group: cfg.group,
                symbol: sym.clone(),
                family,
                bandwidth: cfg.bandwidth,
                resolution: cfg.resolution,
                seed: cfg.seed(),
            })?;
            w.file("weak11.csv", &rep.to_csv())?;
            let errors: Vec<Value> = rep
                .errors
                .iter()
                .map(|(id, eps, msg)| json!({"id": id, "epsilon": eps, "error": msg}))
                .collect();
            let report = json!({
                "symbol": sym.label(),
                "rows": rep.rows.len(),
                "alpha_grid_size": rep.rows.first().map(|r| r.alpha_grid_size),
                "errors": errors,
            });
            (report, true)
        }
    };
    w.json("report.json", &report)?;
    let manifest = json!({
        "schema_version": cfg.schema_version,
        "kind": cfg.experiment.kind(),
        "library_version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(cfg)?,
        "outputs": w.files.clone(),
        "passed": passed,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    w.json("manifest.json", &manifest)?;
    Ok(RunOutcome {
        files: w.files,
        report,
        passed,
    })
}

fn grid_for(cfg: &ExperimentConfig) -> Result<Arc<QuadratureGrid>> {
    Ok(Arc::new(build_grid(cfg.group, cfg.resolution)?))
}

fn regularization_json(r: &Regularization) -> Value {
    match r {
        Regularization::None => json!({"type": "none"}),
        Regularization::Gaussian { sigma } => json!({"type": "gaussian", "sigma": sigma}),
    }
}

/// Grid samples: coordinate columns then `re,im`.
pub fn function_csv(f: &GridFunction) -> String {
    let grid = f.grid();
    let mut out = String::new();
    let _ = writeln!(out, "{},re,im", grid.csv_columns());
    for (p, v) in grid.points().iter().zip(f.values()) {
        let c: Vec<String> = p.coords_for_csv().iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{},{},{}", c.join(","), v.re, v.im);
    }
    out
}

fn run_plancherel(cfg: &ExperimentConfig, functions: usize, w: &mut Writer) -> Result<(Value, bool)> {
    let grid = grid_for(cfg)?;
    let rows: Vec<Result<(f64, f64, f64, f64)>> = (0..functions)
        .into_par_iter()
        .map(|i| {
            let seed = splitmix64(cfg.seed().wrapping_add(i as u64));
            let f = random_band_limited(&grid, cfg.bandwidth, seed)?;
            let fh = forward_transform(&f, cfg.bandwidth)?;
            let back = inverse_transform(&fh, &grid)?;
            let l2 = f.l2_norm_sq();
            let energy = plancherel_energy(&fh);
            let rt = back.max_abs_diff(&f)? / f.sup_norm().max(f64::MIN_POSITIVE);
            Ok((l2, energy, (l2 - energy).abs() / l2, rt))
        })
        .collect();
    let mut csv = String::from("id,l2_norm_sq,energy,plancherel_rel_error,roundtrip_rel_error\n");
    let (mut worst_p, mut worst_r) = (0.0f64, 0.0f64);
    for (i, r) in rows.into_iter().enumerate() {
        let (l2, e, p, rt) = r?;
        worst_p = worst_p.max(p);
        worst_r = worst_r.max(rt);
        let _ = writeln!(csv, "{i},{l2},{e},{p},{rt}");
    }
    w.file("plancherel.csv", &csv)?;
    let report = json!({
        "functions": functions,
        "max_plancherel_rel_error": worst_p,
        "max_roundtrip_rel_error": worst_r,
    });
    Ok((report, true))
}

fn run_czd(
    cfg: &ExperimentConfig,
    input: &crate::experiment::config::FunctionSpec,
    altitudes: &[f64],
    depth: Option<usize>,
    smoothing: &Option<SmoothingSpec>,
    w: &mut Writer,
) -> Result<(Value, bool)> {
    let grid = grid_for(cfg)?;
    let f = input.build(&grid, cfg.bandwidth, cfg.seed())?;
    let sys = match depth {
        Some(d) => build_dyadic_system(&grid, d)?,
        None => build_full_dyadic_system(&grid)?,
    };
    let mut entries = Vec::new();
    let mut csv = String::from("altitude,property,passed,measured,bound\n");
    let mut all_passed = true;
    for &alpha in altitudes {
        let d = match decompose(&f, alpha, &sys) {
            Ok(d) => d,
            Err(Error::Precondition(msg)) => {
                entries.push(json!({"altitude": alpha, "trivial_bound": true, "reason": msg}));
                continue;
            }
            Err(e) => return Err(e),
        };
        let report = verify_properties(&d, &f)?;
        all_passed &= report.all_passed();
        for c in &report.checks {
            let _ = writeln!(csv, "{alpha},{},{},{},{}", c.name, c.passed, c.measured, c.bound);
        }
        let smoothed = match smoothing {
            None => Value::Null,
            Some(spec) => {
                let mode = match spec {
                    SmoothingSpec::Direct => SmoothingMode::Direct,
                    SmoothingSpec::Fourier { bandwidth } => SmoothingMode::Fourier {
                        bandwidth: bandwidth.unwrap_or_else(|| grid.max_bandwidth()),
                    },
                };
                let s = smooth_bad_part(&d, cfg.theta, mode)?;
                let integral = s.total.integral();
                json!({
                    "integral": [integral.re, integral.im],
                    "l1_norm": s.total.l1_norm(),
                    "radii": s.cells.iter().map(|c| c.radius).collect::<Vec<_>>(),
                })
            }
        };
        entries.push(json!({
            "altitude": alpha,
            "trivial_bound": false,
            "summary": d.summary_json(),
            "properties": report.to_json(),
            "all_passed": report.all_passed(),
            "smoothed": smoothed,
        }));
    }
    w.file("properties.csv", &csv)?;
    w.json("czd.json", &Value::Array(entries))?;
    Ok((json!({"f_l1": f.l1_norm(), "all_passed": all_passed}), all_passed))
}

/// Default output directory name for a config path.
pub fn default_out_dir(config: &Path) -> PathBuf {
    config.with_extension("out")
}
