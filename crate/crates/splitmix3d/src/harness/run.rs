//! Task dispatch and artifact persistence. A resolved config runs exactly one
//! diagnostic and leaves behind `config.resolved` (the canonical config that
//! actually ran), `results.json` (all numbers, deterministic bytes), task
//! CSVs, and `meta.json` (wall-clock data, deliberately kept out of
//! `results.json` so identical runs stay byte-identical).

use crate::harness::config::{ConfigError, ResolvedConfig, TaskSpec};
use crate::rng::stream_seed;
use crate::splitting::{
    convergence_experiment, splitting_orbit, steer, FixedSchedule, SplitSchedule, TorusPoint,
    STEER_VERIFY_TOL,
};
use crate::tangent::{
    lie_certificate, lyapunov_spectrum, lyapunov_top, moment_lyapunov, CertificateLevel,
};
use crate::transport::{dynamo_growth, mixing_rate, one_point_ergodicity, FourierField};
use crate::twopoint::{
    drift_diagnostic, invariance_check, meeting_statistics, PsiTable, ALL_CLASSES,
};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};
use thiserror::Error;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for config or environment problems (nothing was computed).
pub const EXIT_INVALID: i32 = 2;
/// Exit code for a diagnostic that ran but did not certify its property.
pub const EXIT_DIAGNOSTIC: i32 = 3;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub diag: Option<String>,
}

/// What a finished run reports back.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub pass: bool,
    pub detail: String,
    pub exit_code: i32,
}

/// Why a run could not start or persist its artifacts.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),
}

struct TaskResult {
    metrics: Map<String, Value>,
    pass: bool,
    detail: String,
    csvs: Vec<(&'static str, String)>,
}

impl TaskResult {
    fn failed(detail: String) -> Self {
        TaskResult { metrics: Map::new(), pass: false, detail, csvs: Vec::new() }
    }
}

/// Loads the config, checks it names the same task the command line invoked,
/// runs the diagnostic, and writes all artifacts into the output directory.
pub fn run(task_name: &str, config_path: &Path, ov: &Overrides) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let (mut cfg, input_hash) = ResolvedConfig::load(config_path)?;
    apply_overrides(&mut cfg, ov)?;
    if cfg.task.name() != task_name {
        return Err(ConfigError::Invalid {
            problems: vec![format!(
                "task.name: config declares {:?} but the command line invoked {:?}",
                cfg.task.name(),
                task_name
            )],
        }
        .into());
    }
    let field = cfg.fields.build().map_err(|p| ConfigError::Invalid { problems: vec![p] })?;

    let result = match execute(&field, &cfg) {
        Ok(result) => result,
        Err(msg) => TaskResult::failed(msg),
    };

    let out_dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("config.resolved"), cfg.canonical_toml())?;

    let mut doc = Map::new();
    doc.insert("task".into(), json!(cfg.task.name()));
    doc.insert("config_hash".into(), json!(cfg.config_hash()));
    doc.insert("input_hash".into(), json!(input_hash));
    doc.insert("pass".into(), json!(result.pass));
    doc.insert("detail".into(), json!(result.detail));
    for (k, v) in &result.metrics {
        doc.insert(k.clone(), v.clone());
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("results serialize");
    text.push('\n');
    std::fs::write(out_dir.join("results.json"), text)?;

    if cfg.output.formats.iter().any(|f| f == "csv") {
        for (name, content) in &result.csvs {
            std::fs::write(out_dir.join(name), content)?;
        }
    }

    let unix_time = SystemTime::now()
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "duration_seconds": started.elapsed().as_secs_f64(),
        "unix_time": unix_time,
    });
    let mut meta_text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    meta_text.push('\n');
    std::fs::write(out_dir.join("meta.json"), meta_text)?;

    let exit_code = if result.pass { EXIT_OK } else { EXIT_DIAGNOSTIC };
    Ok(RunOutcome { out_dir, pass: result.pass, detail: result.detail, exit_code })
}

fn apply_overrides(cfg: &mut ResolvedConfig, ov: &Overrides) -> Result<(), ConfigError> {
    if let Some(seed) = ov.seed {
        cfg.dynamics.seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.output.dir = out.clone();
    }
    if let Some(diag) = &ov.diag {
        if !["invariance", "drift", "meeting"].contains(&diag.as_str()) {
            return Err(ConfigError::Invalid {
                problems: vec![format!(
                    "task.diag: unknown diagnostic {diag:?} (expected invariance, drift, or meeting)"
                )],
            });
        }
        match &mut cfg.task {
            TaskSpec::Twopoint { diag: d, .. } => *d = diag.clone(),
            other => {
                return Err(ConfigError::Invalid {
                    problems: vec![format!(
                        "task.diag: --diag only applies to the twopoint task, not {:?}",
                        other.name()
                    )],
                })
            }
        }
    }
    Ok(())
}

fn execute(
    field: &crate::fields::SplitVectorField,
    cfg: &ResolvedConfig,
) -> Result<TaskResult, String> {
    let dyn_ = &cfg.dynamics;
    match &cfg.task {
        TaskSpec::Simulate { x0 } => {
            let schedule = SplitSchedule::new(dyn_.seed, dyn_.h).map_err(|e| e.to_string())?;
            let orbit = splitting_orbit(field, TorusPoint::new(*x0), &schedule, dyn_.cycles);
            let mut csv = String::from("cycle,x1,x2,x3,logJnorm\n");
            for (m, (p, lj)) in orbit.points.iter().zip(&orbit.log_jnorm).enumerate() {
                let [x1, x2, x3] = p.coords();
                csv.push_str(&format!("{m},{x1},{x2},{x3},{lj}\n"));
            }
            let end = orbit.points.last().unwrap().coords();
            let metrics = obj(&[
                ("endpoint", json!(end)),
                ("log_jnorm_final", json!(orbit.log_jnorm.last().unwrap())),
                ("cycles", json!(dyn_.cycles)),
            ]);
            Ok(TaskResult {
                metrics,
                pass: true,
                detail: format!("orbit of {} cycles dumped", dyn_.cycles),
                csvs: vec![("orbit.csv", csv)],
            })
        }
        TaskSpec::Converge { t, levels } => {
            let report = convergence_experiment(field, *t, levels, dyn_.trials, dyn_.seed)
                .map_err(|e| e.to_string())?;
            let mut csv = String::from("m,median_error\n");
            for (m, med) in report.levels.iter().zip(&report.medians) {
                csv.push_str(&format!("{m},{med}\n"));
            }
            let decreasing = report.medians.windows(2).all(|w| w[1] < w[0]);
            let pass = decreasing && report.slope <= -0.5;
            let metrics = obj(&[
                ("levels", json!(report.levels)),
                ("medians", json!(report.medians)),
                ("slope", json!(report.slope)),
            ]);
            Ok(TaskResult {
                metrics,
                pass,
                detail: format!(
                    "log-log slope {:.3}, medians {}decreasing",
                    report.slope,
                    if decreasing { "" } else { "not " }
                ),
                csvs: vec![("converge.csv", csv)],
            })
        }
        TaskSpec::Steer { x, y } => {
            match steer(field, TorusPoint::new(*x), TorusPoint::new(*y)) {
                Ok(plan) => {
                    let times: Vec<f64> = plan.cycles.iter().flatten().copied().collect();
                    let csv = if times.is_empty() {
                        let [x1, x2, x3] = *x;
                        format!("cycle,x1,x2,x3,logJnorm\n0,{x1},{x2},{x3},{}\n", 3.0f64.sqrt().ln())
                    } else {
                        let schedule = FixedSchedule { times };
                        let orbit = splitting_orbit(
                            field,
                            TorusPoint::new(*x),
                            &schedule,
                            plan.cycles.len(),
                        );
                        let mut csv = String::from("cycle,x1,x2,x3,logJnorm\n");
                        for (m, (p, lj)) in
                            orbit.points.iter().zip(&orbit.log_jnorm).enumerate()
                        {
                            let [x1, x2, x3] = p.coords();
                            csv.push_str(&format!("{m},{x1},{x2},{x3},{lj}\n"));
                        }
                        csv
                    };
                    let pass = plan.error <= STEER_VERIFY_TOL;
                    let metrics = obj(&[
                        ("plan", json!(plan.cycles)),
                        ("endpoint", json!(plan.endpoint.coords())),
                        ("error", json!(plan.error)),
                    ]);
                    Ok(TaskResult {
                        metrics,
                        pass,
                        detail: format!(
                            "{}-cycle plan lands within {:.2e}",
                            plan.cycles.len(),
                            plan.error
                        ),
                        csvs: vec![("orbit.csv", csv)],
                    })
                }
                Err(e) => Ok(TaskResult::failed(e.to_string())),
            }
        }
        TaskSpec::Lyapunov { cadence } => {
            let top = lyapunov_top(field, dyn_.h, dyn_.cycles, dyn_.trials, dyn_.seed)
                .map_err(|e| e.to_string())?;
            let spectrum =
                lyapunov_spectrum(field, dyn_.h, dyn_.cycles, dyn_.trials, dyn_.seed, *cadence)
                    .map_err(|e| e.to_string())?;
            let pass = top.ci_lo > 0.0;
            let metrics = obj(&[
                (
                    "lambda1",
                    json!({
                        "value": top.lambda1,
                        "se": top.se,
                        "ci_lo": top.ci_lo,
                        "ci_hi": top.ci_hi,
                    }),
                ),
                (
                    "spectrum",
                    json!({
                        "exponents": spectrum.exponents,
                        "se": spectrum.se,
                        "sum": spectrum.sum,
                        "sum_se": spectrum.sum_se,
                    }),
                ),
            ]);
            Ok(TaskResult {
                metrics,
                pass,
                detail: format!(
                    "lambda1 = {:.5} with 95% CI [{:.5}, {:.5}]",
                    top.lambda1, top.ci_lo, top.ci_hi
                ),
                csvs: Vec::new(),
            })
        }
        TaskSpec::Moment { q_grid } => {
            let curve =
                moment_lyapunov(field, dyn_.h, dyn_.cycles, dyn_.trials, q_grid, dyn_.seed)
                    .map_err(|e| e.to_string())?;
            let mut csv = String::from("q,Lambda,half_width\n");
            for i in 0..curve.q.len() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    curve.q[i], curve.lambda[i], curve.half_width[i]
                ));
            }
            let mut failures = Vec::new();
            for i in 0..curve.q.len() {
                if curve.q[i] == 0.0 && curve.lambda[i] != 0.0 {
                    failures.push(format!("Lambda(0) = {} instead of 0", curve.lambda[i]));
                }
                if curve.q[i] > 0.0 && curve.q[i] <= 0.05 + 1e-12 && curve.lambda[i] >= 0.0 {
                    failures.push(format!(
                        "Lambda({}) = {} is not negative",
                        curve.q[i], curve.lambda[i]
                    ));
                }
            }
            let pass = failures.is_empty();
            let metrics = obj(&[
                ("q", json!(curve.q)),
                ("lambda", json!(curve.lambda)),
                ("half_width", json!(curve.half_width)),
            ]);
            Ok(TaskResult {
                metrics,
                pass,
                detail: if pass {
                    format!("moment curve on {} orders", curve.q.len())
                } else {
                    failures.join("; ")
                },
                csvs: vec![("moment.csv", csv)],
            })
        }
        TaskSpec::Liecheck { level } => {
            let levels: Vec<CertificateLevel> = match level.as_str() {
                "lifted" => vec![CertificateLevel::Lifted],
                "projective" => vec![CertificateLevel::Projective],
                "twopoint" => vec![CertificateLevel::TwoPoint],
                _ => vec![
                    CertificateLevel::Lifted,
                    CertificateLevel::Projective,
                    CertificateLevel::TwoPoint,
                ],
            };
            let reports: Vec<_> = levels.iter().map(|&l| lie_certificate(field, l)).collect();
            let mut pass = true;
            let mut notes = Vec::new();
            for r in &reports {
                if !r.full_rank {
                    pass = false;
                    notes.push(format!("{:?}: rank {} < {}", r.level, r.rank, r.expected_rank));
                }
                if let Some(pred) = r.det_predicted {
                    if (r.det - pred).abs() > 1e-8 * pred.abs().max(1e-300) {
                        pass = false;
                        notes.push(format!(
                            "{:?}: determinant {} disagrees with closed form {}",
                            r.level, r.det, pred
                        ));
                    }
                }
            }
            let metrics = obj(&[(
                "certificates",
                serde_json::to_value(&reports).expect("certificates serialize"),
            )]);
            Ok(TaskResult {
                metrics,
                pass,
                detail: if pass {
                    format!("{} certificate(s) at full rank", reports.len())
                } else {
                    notes.join("; ")
                },
                csvs: Vec::new(),
            })
        }
        TaskSpec::Twopoint {
            diag,
            x0,
            t_samples,
            q,
            lambda_q,
            scale,
            pairs,
            n_mc,
            table_grid,
            table_dirs,
            table_cycles,
            table_samples,
            d0,
        } => match diag.as_str() {
            "invariance" => {
                let mut rows = Vec::new();
                let mut worst: f64 = 0.0;
                for &class in &ALL_CLASSES {
                    let series = invariance_check(
                        field,
                        class,
                        TorusPoint::new(*x0),
                        dyn_.h,
                        dyn_.cycles,
                        dyn_.seed,
                        *t_samples,
                    )
                    .map_err(|e| e.to_string())?;
                    worst = worst.max(series.max_residual);
                    rows.push(json!({
                        "class": series.class,
                        "max_residual": series.max_residual,
                    }));
                }
                let pass = worst <= 1e-8;
                let metrics = obj(&[
                    ("classes", Value::Array(rows)),
                    ("max_residual", json!(worst)),
                ]);
                Ok(TaskResult {
                    metrics,
                    pass,
                    detail: format!(
                        "worst residual {worst:.2e} over {} cycles at h = {}",
                        dyn_.cycles, dyn_.h
                    ),
                    csvs: Vec::new(),
                })
            }
            "drift" => {
                let lambda_q = match lambda_q {
                    Some(l) => *l,
                    None => {
                        let curve = moment_lyapunov(
                            field,
                            crate::tangent::h_for_eigen(),
                            400,
                            20_000,
                            &[*q],
                            stream_seed(dyn_.seed, 0x7ab1e),
                        )
                        .map_err(|e| e.to_string())?;
                        curve.lambda[0]
                    }
                };
                let table = PsiTable::build(
                    field,
                    *q,
                    lambda_q,
                    *table_grid,
                    *table_dirs,
                    *table_cycles,
                    *table_samples,
                    stream_seed(dyn_.seed, 0x7ab1f),
                )
                .map_err(|e| e.to_string())?;
                let report = drift_diagnostic(field, &table, *scale, *pairs, *n_mc, dyn_.h, dyn_.seed)
                    .map_err(|e| e.to_string())?;
                let pass = report.pass;
                let detail = format!(
                    "90th-percentile one-cycle ratio {:.4} at q = {q}",
                    report.ratio_p90
                );
                let mut metrics = match serde_json::to_value(&report) {
                    Ok(Value::Object(m)) => m,
                    _ => Map::new(),
                };
                metrics.insert("lambda_q".into(), json!(lambda_q));
                Ok(TaskResult { metrics, pass, detail, csvs: Vec::new() })
            }
            _ => {
                let report =
                    meeting_statistics(field, dyn_.trials, dyn_.cycles, *d0, dyn_.h, dyn_.seed)
                        .map_err(|e| e.to_string())?;
                let pass = report.collisions == 0;
                let detail = format!(
                    "{} collisions in {} trials, median closest approach {:.3e}",
                    report.collisions, report.trials, report.min_dist_p50
                );
                let metrics = match serde_json::to_value(&report) {
                    Ok(Value::Object(m)) => m,
                    _ => Map::new(),
                };
                Ok(TaskResult { metrics, pass, detail, csvs: Vec::new() })
            }
        },
        TaskSpec::Mixing { n_grid, seeds, window, modes } => {
            let observables: Vec<(FourierField, FourierField)> = modes
                .iter()
                .map(|k| {
                    let k32 = [k[0] as i32, k[1] as i32, k[2] as i32];
                    let f = FourierField::real_cosine(k32).map_err(|e| e.to_string())?;
                    Ok((f.clone(), f))
                })
                .collect::<Result<_, String>>()?;
            let seed_list: Vec<u64> =
                (0..*seeds).map(|i| stream_seed(dyn_.seed, 0x317 + i as u64)).collect();
            let report = mixing_rate(
                field,
                dyn_.h,
                &observables,
                &seed_list,
                *n_grid,
                (window[0], window[1]),
            )
            .map_err(|e| e.to_string())?;
            let mut csv = String::from("step,value,seed\n");
            for (si, seed) in report.seeds.iter().enumerate() {
                for (m, v) in report.curves[si].iter().enumerate() {
                    csv.push_str(&format!("{m},{v},{seed}\n"));
                }
            }
            let negative = report.pooled.slope < 0.0
                && report.per_seed.iter().all(|r| r.slope < 0.0);
            let metrics = obj(&[
                ("pooled", serde_json::to_value(&report.pooled).unwrap()),
                ("per_seed", serde_json::to_value(&report.per_seed).unwrap()),
                ("noise_floor", json!(report.noise_floor)),
                ("n_grid", json!(report.n_grid)),
                ("window", json!([report.window.0, report.window.1])),
            ]);
            Ok(TaskResult {
                metrics,
                pass: negative,
                detail: format!(
                    "pooled slope {:.4} per cycle over m in [{}, {}]",
                    report.pooled.slope, window[0], window[1]
                ),
                csvs: vec![("curve.csv", csv)],
            })
        }
        TaskSpec::Dynamo { ensemble, b0, snap_every, burn_in } => {
            let report = dynamo_growth(
                field,
                dyn_.h,
                *b0,
                dyn_.cycles,
                *ensemble,
                dyn_.seed,
                *snap_every,
                *burn_in,
            )
            .map_err(|e| e.to_string())?;
            let mut csv = String::from("step,value,seed\n");
            for (step, v) in report.steps.iter().zip(&report.log_l1) {
                csv.push_str(&format!("{step},{v},{}\n", dyn_.seed));
            }
            let pass = report.rate_l1.slope > 0.0 && report.rate_l1.ci_lo > 0.0;
            let metrics = obj(&[
                ("rate_l1", serde_json::to_value(&report.rate_l1).unwrap()),
                ("rate_l2", serde_json::to_value(&report.rate_l2).unwrap()),
                ("slope_se", json!(report.slope_se)),
                ("per_time_rate", json!(report.per_time_rate)),
                ("ensemble", json!(report.ensemble)),
            ]);
            Ok(TaskResult {
                metrics,
                pass,
                detail: format!(
                    "log L1 grows at {:.4} per cycle ({:.4} per time unit)",
                    report.rate_l1.slope, report.per_time_rate
                ),
                csvs: vec![("curve.csv", csv)],
            })
        }
        TaskSpec::Ergodicity { bins, start } => {
            let report = one_point_ergodicity(
                field,
                dyn_.h,
                dyn_.cycles,
                dyn_.trials,
                *bins,
                TorusPoint::new(*start),
                dyn_.seed,
            )
            .map_err(|e| e.to_string())?;
            let mut csv = String::from("step,value,seed\n");
            for (m, v) in report.discrepancy.iter().enumerate() {
                csv.push_str(&format!("{m},{v},{}\n", dyn_.seed));
            }
            let decays = report.rate.as_ref().map_or(true, |r| r.slope < 0.0);
            let pass = report.stationary_p > 0.01 && decays;
            let metrics = obj(&[
                ("stationary_p", json!(report.stationary_p)),
                ("stationary_chi2", json!(report.stationary_chi2)),
                ("plateau", json!(report.plateau)),
                ("rate", serde_json::to_value(&report.rate).unwrap()),
                ("bins", json!(report.bins)),
                ("trials", json!(report.trials)),
            ]);
            Ok(TaskResult {
                metrics,
                pass,
                detail: format!(
                    "stationarity p = {:.4}; point-mass discrepancy ends at {:.3e}",
                    report.stationary_p,
                    report.discrepancy.last().unwrap()
                ),
                csvs: vec![("curve.csv", csv)],
            })
        }
    }
}

fn obj(entries: &[(&str, Value)]) -> Map<String, Value> {
    let mut m = Map::new();
    for (k, v) in entries {
        m.insert((*k).to_string(), v.clone());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("exp.toml");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn simulate_writes_deterministic_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let out1 = tmp.path().join("a");
        let out2 = tmp.path().join("b");
        let body = format!(
            r#"
            [fields]
            kind = "abc"
            A = 1.0
            B = 1.0
            C = 1.0
            [dynamics]
            h = 0.5
            cycles = 20
            seed = 9
            [task]
            name = "simulate"
            [output]
            dir = "{}"
            "#,
            out1.display()
        );
        let path = write_config(tmp.path(), &body);
        let r1 = run("simulate", &path, &Overrides::default()).unwrap();
        assert_eq!(r1.exit_code, EXIT_OK);
        let ov = Overrides { out: Some(out2.display().to_string()), ..Default::default() };
        run("simulate", &path, &ov).unwrap();
        for name in ["results.json", "orbit.csv"] {
            let a = std::fs::read(out1.join(name)).unwrap();
            let b = std::fs::read(out2.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
        let csv = std::fs::read_to_string(out1.join("orbit.csv")).unwrap();
        assert!(csv.starts_with("cycle,x1,x2,x3,logJnorm\n"));
        assert_eq!(csv.lines().count(), 22);
        let resolved = std::fs::read_to_string(out1.join("config.resolved")).unwrap();
        assert!(resolved.contains("trials = 16"));
    }

    #[test]
    fn task_mismatch_is_a_validation_error() {
        let tmp = tempfile::tempdir().unwrap();
        let body = r#"
            [fields]
            kind = "abc"
            A = 1.0
            B = 1.0
            C = 1.0
            [dynamics]
            h = 1.0
            cycles = 10
            [task]
            name = "simulate"
        "#;
        let path = write_config(tmp.path(), body);
        let err = run("lyapunov", &path, &Overrides::default()).unwrap_err();
        match err {
            RunError::Config(ConfigError::Invalid { problems }) => {
                assert!(problems[0].starts_with("task.name"), "{problems:?}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn seed_override_changes_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("o");
        let body = format!(
            r#"
            [fields]
            kind = "abc"
            A = 1.0
            B = 1.0
            C = 1.0
            [dynamics]
            h = 0.5
            cycles = 10
            seed = 1
            [task]
            name = "simulate"
            [output]
            dir = "{}"
            "#,
            out.display()
        );
        let path = write_config(tmp.path(), &body);
        run("simulate", &path, &Overrides::default()).unwrap();
        let first = std::fs::read_to_string(out.join("orbit.csv")).unwrap();
        let ov = Overrides { seed: Some(2), ..Default::default() };
        run("simulate", &path, &ov).unwrap();
        let second = std::fs::read_to_string(out.join("orbit.csv")).unwrap();
        assert_ne!(first, second);
        let resolved = std::fs::read_to_string(out.join("config.resolved")).unwrap();
        assert!(resolved.contains("seed = 2"));
    }

    #[test]
    fn steer_task_verifies_its_plan() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("o");
        let body = format!(
            r#"
            [fields]
            kind = "abc"
            A = 1.0
            B = 1.0
            C = 1.0
            [dynamics]
            h = 1.0
            cycles = 1
            [task]
            name = "steer"
            x = [0.3, 1.1, 2.0]
            y = [4.0, 0.7, 5.5]
            [output]
            dir = "{}"
            "#,
            out.display()
        );
        let path = write_config(tmp.path(), &body);
        let outcome = run("steer", &path, &Overrides::default()).unwrap();
        assert_eq!(outcome.exit_code, EXIT_OK, "{}", outcome.detail);
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap())
                .unwrap();
        assert!(doc["error"].as_f64().unwrap() <= 1e-9);
        assert_eq!(doc["pass"], serde_json::Value::Bool(true));
    }
}
