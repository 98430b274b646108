//! Dispatch of a resolved configuration to the experiment drivers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;

use confine::automaton::{DecoderConfig, Velocity};
use confine::experiments::bias::{bias_scan, predicted_shrink, ring_for};
use confine::experiments::cantor::{cantor_offline, cantor_string, closed_form_weight, Placement};
use confine::experiments::clusters::{cluster_decompose, event_points};
use confine::experiments::init::decode_time_curve;
use confine::experiments::order::{order_params, Sampling};
use confine::experiments::stats::{mean, sem};
use confine::experiments::{estimate_plog, estimate_tmem, Estimate, RunSpec};
use confine::fieldsim::{field_tmem, FieldConfig};
use confine::noise::write_log;

use crate::config::{Experiment, RunConfig};
use crate::output::{Row, RowWriter};

/// Run the experiment, writing rows to `out` as each point finishes.
pub fn run<W: Write + Send>(cfg: &RunConfig, out: W) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    let mut writer = RowWriter::new(out, cfg.format);
    pool.install(|| dispatch(cfg, &mut writer))
}

/// Run with output going to `cfg.out` or standard output.
pub fn run_to_destination(cfg: &RunConfig) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            run(cfg, BufWriter::new(f))
        }
        None => run(cfg, std::io::stdout()),
    }
}

fn dispatch<W: Write>(cfg: &RunConfig, w: &mut RowWriter<W>) -> Result<()> {
    match cfg.experiment {
        Experiment::Adversarial => return adversarial(cfg, w),
        Experiment::Cantor => return cantor(cfg, w),
        Experiment::Field => return field(cfg, w),
        _ => {}
    }
    for &l in &cfg.ls {
        for &p in &cfg.ps {
            let spec = spec_for(cfg, l, p)?;
            let start = Instant::now();
            if let Some(dir) = &cfg.dump_noise {
                dump_noise(cfg, &spec, dir)?;
            }
            let rows = match cfg.experiment {
                Experiment::Plog | Experiment::Sweep => vec![estimate_row(cfg, &spec, "p_log", estimate_plog(&spec, cfg.trials)?)],
                Experiment::Tmem => {
                    let max = cfg.max_rounds.unwrap_or(100 * l as u64);
                    let est = estimate_tmem(&spec, cfg.trials, max, cfg.probe_for(l))?;
                    vec![estimate_row(cfg, &spec, "t_mem", est)]
                }
                Experiment::Transition => transition(cfg, &spec)?,
                Experiment::Init => init(cfg, &spec)?,
                Experiment::Clusters => clusters(cfg, &spec)?,
                Experiment::Adversarial | Experiment::Cantor | Experiment::Field => unreachable!(),
            };
            for row in &rows {
                w.write(row)?;
            }
            eprintln!(
                "[{}] L={l} p={p}: {} rows in {:.1}s",
                cfg.experiment.name(),
                rows.len(),
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}

pub fn spec_for(cfg: &RunConfig, l: usize, p: f64) -> Result<RunSpec> {
    let mut dc = DecoderConfig::new(cfg.d, l, cfg.z.resolve(l))?.with_v(cfg.v)?;
    dc.modified_rules = cfg.modified_rules;
    let mut spec = RunSpec::new(dc, p, cfg.seed);
    spec.schedule = cfg.schedule;
    spec.p_meas = cfg.p_meas_for(p);
    spec.noise = cfg.noise;
    Ok(spec)
}

fn base_row(cfg: &RunConfig, spec: &RunSpec, metric: String) -> Row {
    Row {
        experiment: cfg.experiment.name().into(),
        code: cfg.code_name().into(),
        d: cfg.d,
        l: spec.decoder.l,
        z: spec.decoder.z,
        v: spec.decoder.v.label(),
        schedule: spec.schedule.label(),
        p_flip: spec.p,
        p_meas: spec.p_meas,
        metric,
        value: 0.0,
        stderr: 0.0,
        n_trials: cfg.trials,
        censored: 0,
        seed: cfg.seed,
    }
}

fn estimate_row(cfg: &RunConfig, spec: &RunSpec, metric: &str, est: Estimate) -> Row {
    Row {
        value: est.value,
        stderr: est.stderr,
        n_trials: est.n_trials,
        censored: est.censored,
        ..base_row(cfg, spec, metric.into())
    }
}

fn valued(mut row: Row, value: f64, stderr: f64) -> Row {
    row.value = value;
    row.stderr = stderr;
    row
}

/// Noise of trial 0 over its first `L` rounds (or `max_rounds` if smaller).
fn dump_noise(cfg: &RunConfig, spec: &RunSpec, dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let l = spec.decoder.l as u64;
    let rounds = cfg.max_rounds.map_or(l, |m| m.min(l));
    let mut world = spec.world(0)?.record_noise();
    world.run(rounds);
    let path = dir.join(format!("{}_L{}_p{}.jsonl", cfg.experiment.name(), spec.decoder.l, spec.p));
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_log(world.log.as_deref().unwrap_or_default(), BufWriter::new(f))?;
    Ok(())
}

fn transition(cfg: &RunConfig, spec: &RunSpec) -> Result<Vec<Row>> {
    let op = order_params(spec, Sampling::for_size(spec.decoder.l, cfg.samples, cfg.trials))?;
    Ok(vec![
        valued(base_row(cfg, spec, "m".into()), op.m, op.m_err),
        valued(base_row(cfg, spec, "m_abs".into()), op.m_abs, op.m_abs_err),
        valued(base_row(cfg, spec, "chi".into()), op.chi, op.chi_err),
        valued(base_row(cfg, spec, "binder".into()), op.binder, op.binder_err),
    ])
}

/// Probes every `probe_interval` rounds (default `L/4`) up to `max_rounds`
/// (default `8 L`).
fn init(cfg: &RunConfig, spec: &RunSpec) -> Result<Vec<Row>> {
    let l = spec.decoder.l as u64;
    let step = cfg.probe_interval.unwrap_or((l / 4).max(1));
    let max = cfg.max_rounds.unwrap_or(8 * l);
    let probes: Vec<u64> = (0..=max / step).map(|i| i * step).collect();
    let curve = decode_time_curve(spec, &probes, cfg.trials, true)?;
    let mut rows: Vec<Row> = curve
        .points
        .iter()
        .map(|&(t, m, e)| {
            let mut r = valued(base_row(cfg, spec, format!("t_dec@t={t}")), m, e);
            r.censored = curve.capped;
            r
        })
        .collect();
    let t_indep = curve.t_indep(2.0, 0.1).map_or(f64::NAN, |t| t as f64);
    let mut r = valued(base_row(cfg, spec, "t_indep".into()), t_indep, step as f64);
    r.censored = curve.capped;
    rows.push(r);
    Ok(rows)
}

/// Survivor fraction at each level of the cluster decomposition of the
/// noise seen over `max_rounds` rounds (default `L`).
fn clusters(cfg: &RunConfig, spec: &RunSpec) -> Result<Vec<Row>> {
    let rounds = cfg.max_rounds.unwrap_or(spec.decoder.l as u64);
    let c = cfg.cluster;
    let per_trial: Vec<Vec<usize>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<Vec<usize>> {
            let mut world = spec.world(i)?.record_noise();
            world.run(rounds);
            let pts = event_points(world.log.as_deref().unwrap_or_default(), world.code.geom);
            Ok(cluster_decompose(&pts, c.w, c.b, c.n, c.levels)?.survivors())
        })
        .collect::<Result<_>>()?;
    let mut rows = vec![];
    let events: Vec<f64> = per_trial.iter().map(|s| s[0] as f64).collect();
    rows.push(valued(base_row(cfg, spec, "events".into()), mean(&events), sem(&events)));
    for k in 1..=c.levels {
        let frac: Vec<f64> = per_trial
            .iter()
            .filter(|s| s[0] > 0)
            .map(|s| s[k] as f64 / s[0] as f64)
            .collect();
        let mut r = valued(base_row(cfg, spec, format!("survivors@k={k}")), mean(&frac), sem(&frac));
        r.n_trials = frac.len() as u64;
        rows.push(r);
    }
    Ok(rows)
}

fn adversarial<W: Write>(cfg: &RunConfig, w: &mut RowWriter<W>) -> Result<()> {
    for &p in &cfg.ps {
        let start = Instant::now();
        let points = bias_scan(p, &cfg.r_values, cfg.trials, cfg.stride, cfg.seed)?;
        for b in points {
            let expected = predicted_shrink(p, b.r, cfg.stride);
            let row = |metric: String, value: f64, stderr: f64| Row {
                experiment: cfg.experiment.name().into(),
                code: "rep1d".into(),
                d: 1,
                l: ring_for(b.r),
                z: 0,
                v: Velocity::Relaxed.label(),
                schedule: "sync".into(),
                p_flip: p,
                p_meas: 0.0,
                metric,
                value,
                stderr,
                n_trials: b.samples,
                censored: 0,
                seed: cfg.seed,
            };
            let grow_err = (b.p_grow() * (1.0 - b.p_grow()) / b.samples as f64).sqrt();
            w.write(&row(format!("p_shrink@r={}", b.r), b.p_shrink(), b.sigma(expected)))?;
            w.write(&row(format!("p_grow@r={}", b.r), b.p_grow(), grow_err))?;
            w.write(&row(format!("predicted_shrink@r={}", b.r), expected, 0.0))?;
        }
        eprintln!("[adversarial] p={p}: done in {:.1}s", start.elapsed().as_secs_f64());
    }
    Ok(())
}

fn cantor<W: Write>(cfg: &RunConfig, w: &mut RowWriter<W>) -> Result<()> {
    for &l in &cfg.ls {
        let z = cfg.z.resolve(l);
        let pattern = cantor_string(l, cfg.q, cfg.min_segment)?;
        let off = cantor_offline(cfg.d, l, z, cfg.v, &pattern, Placement::default())?;
        let dc = DecoderConfig::new(cfg.d, l, z)?.with_v(cfg.v)?;
        let spec = RunSpec::new(dc, 0.0, cfg.seed);
        let mut base = base_row(cfg, &spec, String::new());
        base.p_meas = 0.0;
        base.n_trials = 1;
        let nontrivial = !off.success || off.class != 0;
        let rows = [
            ("weight", pattern.weight() as f64),
            ("closed_form_weight", closed_form_weight(l, cfg.q)),
            ("nontrivial", f64::from(u8::from(nontrivial))),
            ("decode_rounds", off.rounds as f64),
        ];
        for (metric, value) in rows {
            let mut r = valued(Row { metric: metric.into(), ..base.clone() }, value, 0.0);
            r.censored = u64::from(!off.success);
            w.write(&r)?;
        }
        eprintln!("[cantor] L={l}: weight {} nontrivial {nontrivial}", pattern.weight());
    }
    Ok(())
}

/// The field decoder has no control lattice, so `Z` is reported as 0 and
/// `v` as `field`; the exponent goes into the metric name.
fn field<W: Write>(cfg: &RunConfig, w: &mut RowWriter<W>) -> Result<()> {
    let metric = if cfg.charged {
        format!("t_mem@alpha={}:charged", cfg.alpha)
    } else {
        format!("t_mem@alpha={}", cfg.alpha)
    };
    for &l in &cfg.ls {
        for &p in &cfg.ps {
            let start = Instant::now();
            let fc = FieldConfig::new(cfg.d, l, cfg.alpha, cfg.charged)?;
            let max = cfg.max_rounds.unwrap_or(100 * l as u64);
            let est = field_tmem(fc, p, cfg.trials, max, cfg.probe_interval.unwrap_or(1), cfg.seed)?;
            w.write(&Row {
                experiment: cfg.experiment.name().into(),
                code: cfg.code_name().into(),
                d: cfg.d,
                l,
                z: 0,
                v: "field".into(),
                schedule: "sync".into(),
                p_flip: p,
                p_meas: 0.0,
                metric: metric.clone(),
                value: est.value,
                stderr: est.stderr,
                n_trials: est.n_trials,
                censored: est.censored,
                seed: cfg.seed,
            })?;
            eprintln!("[field] L={l} p={p}: done in {:.1}s", start.elapsed().as_secs_f64());
        }
    }
    Ok(())
}
