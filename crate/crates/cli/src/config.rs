//! Command-line and config-file parsing into a fully resolved [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use confine::automaton::{z_log32, Velocity};
use confine::experiments::NoiseChoice;
use confine::noise::PairStride;
use confine::schedule::ScheduleKind;

#[derive(Parser, Debug)]
#[command(name = "confine", version, about = "Monte Carlo experiments for local automaton decoders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Logical failure probability after L noisy rounds.
    Plog(Flags),
    /// Memory time: rounds until the first detected logical failure.
    Tmem(Flags),
    /// Logical failure probability over a grid of sizes and error rates.
    Sweep(Flags),
    /// Magnetization, susceptibility and Binder cumulant of the decoded state.
    Transition(Flags),
    /// Offline decoding time after a quench from a random state.
    Init(Flags),
    /// One-round fate of a large anyon pair under adversarial pair creation.
    Adversarial(Flags),
    /// Memory time of the long-range field decoder.
    Field(Flags),
    /// Offline decoding of Cantor-string error patterns.
    Cantor(Flags),
    /// Hierarchical cluster decomposition of sampled noise.
    Clusters(Flags),
}

impl Command {
    pub fn split(self) -> (Experiment, Flags) {
        match self {
            Command::Plog(f) => (Experiment::Plog, f),
            Command::Tmem(f) => (Experiment::Tmem, f),
            Command::Sweep(f) => (Experiment::Sweep, f),
            Command::Transition(f) => (Experiment::Transition, f),
            Command::Init(f) => (Experiment::Init, f),
            Command::Adversarial(f) => (Experiment::Adversarial, f),
            Command::Field(f) => (Experiment::Field, f),
            Command::Cantor(f) => (Experiment::Cantor, f),
            Command::Clusters(f) => (Experiment::Clusters, f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Plog,
    Tmem,
    Sweep,
    Transition,
    Init,
    Adversarial,
    Field,
    Cantor,
    Clusters,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Plog => "plog",
            Experiment::Tmem => "tmem",
            Experiment::Sweep => "sweep",
            Experiment::Transition => "transition",
            Experiment::Init => "init",
            Experiment::Adversarial => "adversarial",
            Experiment::Field => "field",
            Experiment::Cantor => "cantor",
            Experiment::Clusters => "clusters",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

/// Raw flags. Everything except the switches is kept as text so that flags
/// and config-file values go through the same parsers.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// JSON object with default values; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// rep1d or toric2d.
    #[arg(long)]
    pub code: Option<String>,
    /// System size, or a comma-separated list.
    #[arg(long = "L")]
    pub l: Option<String>,
    /// Control depth: an integer or log32 for ceil(log_{3/2} L).
    #[arg(long = "Z")]
    pub z: Option<String>,
    /// Message sub-steps per round, or inf.
    #[arg(long)]
    pub v: Option<String>,
    /// Error rate, a comma-separated list, or a range start:stop:step.
    #[arg(long)]
    pub p: Option<String>,
    /// Measurement error rate; defaults to p.
    #[arg(long = "p-meas")]
    pub p_meas: Option<String>,
    /// sync, poisson, window:EPS or marching.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long = "modified-rules")]
    pub modified_rules: bool,
    /// iid, single_pair:R0[:STRIDE] or blocked:R0:WIDTH[:STRIDE].
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long = "max-rounds")]
    pub max_rounds: Option<String>,
    #[arg(long = "probe-interval")]
    pub probe_interval: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub workers: Option<String>,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    /// Directory for JSONL noise logs of trial 0 at every point.
    #[arg(long = "dump-noise")]
    pub dump_noise: Option<PathBuf>,
    /// Pair separations for the adversarial scan.
    #[arg(long)]
    pub r: Option<String>,
    /// Spacing of created pairs: three or four.
    #[arg(long)]
    pub stride: Option<String>,
    /// Power-law exponent of the field decoder.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub charged: bool,
    /// Cantor branching number.
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long = "min-segment")]
    pub min_segment: Option<String>,
    /// Samples per chain for the transition observables.
    #[arg(long)]
    pub samples: Option<String>,
    /// Cluster ball width, buffer, scale factor and number of levels.
    #[arg(long = "cluster")]
    pub cluster: Option<String>,
}

/// Keys accepted in a config file, with the flag each one mirrors.
const FILE_KEYS: &[&str] = &[
    "code",
    "L",
    "Z",
    "v",
    "p",
    "p_meas",
    "schedule",
    "modified_rules",
    "noise",
    "trials",
    "max_rounds",
    "probe_interval",
    "seed",
    "workers",
    "out",
    "format",
    "dump_noise",
    "r",
    "stride",
    "alpha",
    "charged",
    "q",
    "min_segment",
    "samples",
    "cluster",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZSpec {
    Fixed(usize),
    Log32,
}

impl ZSpec {
    pub fn resolve(self, l: usize) -> usize {
        match self {
            ZSpec::Fixed(z) => z,
            ZSpec::Log32 => z_log32(l),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterParams {
    pub w: i64,
    pub b: i64,
    pub n: i64,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub d: usize,
    pub ls: Vec<usize>,
    pub z: ZSpec,
    pub v: Velocity,
    pub ps: Vec<f64>,
    pub p_meas: Option<f64>,
    pub schedule: ScheduleKind,
    pub modified_rules: bool,
    pub noise: NoiseChoice,
    pub trials: u64,
    pub max_rounds: Option<u64>,
    pub probe_interval: Option<u64>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub dump_noise: Option<PathBuf>,
    pub r_values: Vec<usize>,
    pub stride: PairStride,
    pub alpha: f64,
    pub charged: bool,
    pub q: usize,
    pub min_segment: usize,
    pub samples: u64,
    pub cluster: ClusterParams,
}

impl RunConfig {
    pub fn code_name(&self) -> &'static str {
        if self.d == 1 {
            "rep1d"
        } else {
            "toric2d"
        }
    }

    pub fn p_meas_for(&self, p: f64) -> f64 {
        self.p_meas.unwrap_or(p)
    }

    pub fn probe_for(&self, l: usize) -> u64 {
        self.probe_interval.unwrap_or(l as u64)
    }
}

#[cfg(test)]
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (exp, flags) = cli.command.split();
    resolve(exp, flags)
}

/// Merge the config file (if any) under the flags and validate.
pub fn resolve(exp: Experiment, flags: Flags) -> Result<RunConfig> {
    let file = match &flags.config {
        Some(path) => read_file(path)?,
        None => BTreeMap::new(),
    };
    let get = |flag: &Option<String>, key: &str| -> Option<String> { flag.clone().or_else(|| file.get(key).cloned()) };
    let switch = |flag: bool, key: &str| -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match file.get(key).map(String::as_str) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(other) => bail!("{key} must be true or false, got {other}"),
        }
    };
    let path = |flag: &Option<PathBuf>, key: &str| flag.clone().or_else(|| file.get(key).map(PathBuf::from));

    let d = match get(&flags.code, "code").as_deref() {
        None | Some("rep1d") => 1,
        Some("toric2d") => 2,
        Some(other) => bail!("unknown code {other:?}; use rep1d or toric2d"),
    };
    let ls = match get(&flags.l, "L") {
        Some(s) => parse_list(&s, "L")?,
        None if exp == Experiment::Adversarial => vec![],
        None => bail!("missing required value L (pass --L or set it in the config file)"),
    };
    if let Some(&l) = ls.iter().find(|&&l| l < 3) {
        bail!("L must be at least 3, got {l}");
    }
    let z = match get(&flags.z, "Z").as_deref() {
        None | Some("log32") => ZSpec::Log32,
        Some(s) => ZSpec::Fixed(parse_num(s, "Z")?),
    };
    let v = match get(&flags.v, "v").as_deref() {
        None => Velocity::Finite(3),
        Some("inf") => Velocity::Relaxed,
        Some(s) => {
            let v: u32 = parse_num(s, "v")?;
            if v == 0 {
                bail!("v must be positive or inf");
            }
            Velocity::Finite(v)
        }
    };
    let ps = match get(&flags.p, "p") {
        Some(s) => parse_probs(&s)?,
        None if matches!(exp, Experiment::Cantor) => vec![0.0],
        None => bail!("missing required value p (pass --p or set it in the config file)"),
    };
    let p_meas = get(&flags.p_meas, "p_meas").map(|s| parse_prob(&s, "p_meas")).transpose()?;
    let schedule = match get(&flags.schedule, "schedule") {
        Some(s) => parse_schedule(&s)?,
        None => ScheduleKind::Synchronous,
    };
    let stride = match get(&flags.stride, "stride").as_deref() {
        None | Some("three") => PairStride::Three,
        Some("four") => PairStride::Four,
        Some(other) => bail!("stride must be three or four, got {other:?}"),
    };
    let noise = match get(&flags.noise, "noise") {
        Some(s) => parse_noise(&s, stride)?,
        None => NoiseChoice::Iid,
    };
    let trials = parse_num(&get(&flags.trials, "trials").unwrap_or_else(|| "100".into()), "trials")?;
    if trials == 0 {
        bail!("trials must be positive");
    }
    let max_rounds = get(&flags.max_rounds, "max_rounds").map(|s| parse_num(&s, "max_rounds")).transpose()?;
    let probe_interval = get(&flags.probe_interval, "probe_interval")
        .map(|s| parse_num::<u64>(&s, "probe_interval"))
        .transpose()?;
    if probe_interval == Some(0) {
        bail!("probe_interval must be positive");
    }
    let seed = parse_num(&get(&flags.seed, "seed").unwrap_or_else(|| "0".into()), "seed")?;
    let workers = get(&flags.workers, "workers").map(|s| parse_num::<usize>(&s, "workers")).transpose()?;
    if workers == Some(0) {
        bail!("workers must be positive");
    }
    let format = match get(&flags.format, "format").as_deref() {
        None | Some("csv") => Format::Csv,
        Some("jsonl") => Format::Jsonl,
        Some(other) => bail!("format must be csv or jsonl, got {other:?}"),
    };
    let r_values = match get(&flags.r, "r") {
        Some(s) => parse_list(&s, "r")?,
        None => (3..=21).step_by(2).collect(),
    };
    if let Some(&r) = r_values.iter().find(|&&r| r < 3 || r % 2 == 0) {
        bail!("pair separations must be odd and at least 3, got {r}");
    }
    let alpha: f64 = parse_num(&get(&flags.alpha, "alpha").unwrap_or_else(|| "2".into()), "alpha")?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        bail!("alpha must be positive, got {alpha}");
    }
    let q = parse_num(&get(&flags.q, "q").unwrap_or_else(|| "6".into()), "q")?;
    let min_segment = parse_num(&get(&flags.min_segment, "min_segment").unwrap_or_else(|| "1".into()), "min_segment")?;
    let samples = parse_num(&get(&flags.samples, "samples").unwrap_or_else(|| "100".into()), "samples")?;
    let cluster = match get(&flags.cluster, "cluster") {
        Some(s) => parse_cluster(&s)?,
        None => ClusterParams { w: 1, b: 4, n: 20, levels: 2 },
    };

    Ok(RunConfig {
        experiment: exp,
        d,
        ls,
        z,
        v,
        ps,
        p_meas,
        schedule,
        modified_rules: switch(flags.modified_rules, "modified_rules")?,
        noise,
        trials,
        max_rounds,
        probe_interval,
        seed,
        workers,
        out: path(&flags.out, "out"),
        format,
        dump_noise: path(&flags.dump_noise, "dump_noise"),
        r_values,
        stride,
        alpha,
        charged: switch(flags.charged, "charged")?,
        q,
        min_segment,
        samples,
        cluster,
    })
}

/// Read a flat JSON object, turning every value into the text a flag would
/// carry. Arrays become comma-separated lists.
fn read_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))?;
    let Value::Object(map) = value else {
        bail!("config file must hold a JSON object");
    };
    let mut out = BTreeMap::new();
    for (k, v) in map {
        if !FILE_KEYS.contains(&k.as_str()) {
            bail!("unknown config key {k:?}; expected one of {}", FILE_KEYS.join(", "));
        }
        out.insert(k.clone(), scalar_text(&v).with_context(|| format!("config key {k}"))?);
    }
    Ok(out)
}

fn scalar_text(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar_text).collect::<Result<_>>()?;
            Ok(parts.join(","))
        }
        _ => bail!("values must be strings, numbers, booleans or flat arrays"),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| anyhow!("{name}: cannot parse {s:?} as a number"))
}

fn parse_list(s: &str, name: &str) -> Result<Vec<usize>> {
    let out: Vec<usize> = s.split(',').map(|x| parse_num(x, name)).collect::<Result<_>>()?;
    if out.is_empty() {
        bail!("{name}: empty list");
    }
    Ok(out)
}

fn parse_prob(s: &str, name: &str) -> Result<f64> {
    let p: f64 = parse_num(s, name)?;
    if !(0.0..=1.0).contains(&p) {
        bail!("{name} must lie in [0, 1], got {p}");
    }
    Ok(p)
}

/// A single value, a comma-separated list, or `start:stop:step` with both
/// ends included.
pub fn parse_probs(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let out = match parts.as_slice() {
        [_] => s.split(',').map(|x| parse_prob(x, "p")).collect::<Result<Vec<_>>>()?,
        [a, b, c] => {
            let (start, stop) = (parse_prob(a, "p")?, parse_prob(b, "p")?);
            let step: f64 = parse_num(c, "p step")?;
            if !(step > 0.0) {
                bail!("p range step must be positive, got {step}");
            }
            if stop < start {
                bail!("p range {s:?} is empty");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // Round away the accumulated binary noise so that 0.02:0.1:0.02
            // yields 0.06 rather than 0.060000000000000005.
            (0..=n)
                .map(|i| {
                    let x = start + step * i as f64;
                    (x * 1e12).round() / 1e12
                })
                .collect()
        }
        _ => bail!("p must be a value, a list or start:stop:step, got {s:?}"),
    };
    if out.is_empty() {
        bail!("p: empty list");
    }
    Ok(out)
}

pub fn parse_schedule(s: &str) -> Result<ScheduleKind> {
    match s {
        "sync" | "synchronous" => Ok(ScheduleKind::Synchronous),
        "poisson" => Ok(ScheduleKind::Poisson),
        "marching" => Ok(ScheduleKind::MarchingSoldiers),
        _ => {
            let Some(eps) = s.strip_prefix("window:") else {
                bail!("unknown schedule {s:?}; use sync, poisson, window:EPS or marching");
            };
            let eps: f64 = parse_num(eps, "window half-width")?;
            ScheduleKind::uniform_window(eps).map_err(|e| anyhow!("schedule {s:?}: {e}"))
        }
    }
}

fn parse_noise(s: &str, stride: PairStride) -> Result<NoiseChoice> {
    let parts: Vec<&str> = s.split(':').collect();
    let stride_of = |t: Option<&&str>| -> Result<PairStride> {
        match t.copied() {
            None => Ok(stride),
            Some("three") => Ok(PairStride::Three),
            Some("four") => Ok(PairStride::Four),
            Some(other) => bail!("stride must be three or four, got {other:?}"),
        }
    };
    match parts.as_slice() {
        ["iid"] => Ok(NoiseChoice::Iid),
        ["single_pair", r0, rest @ ..] if rest.len() <= 1 => Ok(NoiseChoice::SinglePair {
            r0: parse_num(r0, "r0")?,
            stride: stride_of(rest.first())?,
        }),
        ["blocked", r0, width, rest @ ..] if rest.len() <= 1 => Ok(NoiseChoice::Blocked {
            r0: parse_num(r0, "r0")?,
            stride: stride_of(rest.first())?,
            block_width: parse_num(width, "block width")?,
        }),
        _ => bail!("noise must be iid, single_pair:R0[:STRIDE] or blocked:R0:WIDTH[:STRIDE], got {s:?}"),
    }
}

fn parse_cluster(s: &str) -> Result<ClusterParams> {
    let v: Vec<&str> = s.split(',').collect();
    let [w, b, n, levels] = v.as_slice() else {
        bail!("cluster must be W,B,N,LEVELS, got {s:?}");
    };
    Ok(ClusterParams {
        w: parse_num(w, "cluster w")?,
        b: parse_num(b, "cluster b")?,
        n: parse_num(n, "cluster n")?,
        levels: parse_num(levels, "cluster levels")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<RunConfig> {
        parse_args(std::iter::once("confine").chain(args.split_whitespace()))
    }

    #[test]
    fn log32_depth_for_fifteen() {
        let c = parse("plog --code rep1d --L 15 --Z log32 --p 0.06 --trials 1000 --seed 7").unwrap();
        // 1.5^6 = 11.4 < 15 <= 1.5^7 = 17.1
        assert_eq!(c.z.resolve(15), 7);
        assert_eq!(c.trials, 1000);
        assert_eq!(c.seed, 7);
        assert_eq!(c.v, Velocity::Finite(3));
        assert_eq!(c.p_meas_for(0.06), 0.06);
    }

    #[test]
    fn probability_range_expands() {
        assert_eq!(parse_probs("0.02:0.1:0.02").unwrap(), vec![0.02, 0.04, 0.06, 0.08, 0.1]);
        assert_eq!(parse_probs("0.01,0.03").unwrap(), vec![0.01, 0.03]);
        assert!(parse_probs("0.1:0.02:0.02").is_err());
        assert!(parse_probs("0.02:0.1:0").is_err());
        assert!(parse_probs("1.5").is_err());
    }

    #[test]
    fn schedules() {
        assert!(parse_schedule("window:2.0").is_err());
        assert!(parse_schedule("window:1").is_err());
        assert_eq!(parse_schedule("window:0.5").unwrap(), ScheduleKind::UniformWindow { eps: 0.5 });
        assert_eq!(parse_schedule("marching").unwrap(), ScheduleKind::MarchingSoldiers);
        assert!(parse_schedule("async").is_err());
        assert!(parse("plog --L 9 --p 0.1 --schedule window:2.0").is_err());
    }

    #[test]
    fn validation_errors() {
        assert!(parse("plog --p 0.1").is_err());
        assert!(parse("plog --L 2 --p 0.1").is_err());
        assert!(parse("plog --L 9 --p 0.1 --code surface").is_err());
        assert!(parse("plog --L 9 --p 0.1 --bogus 3").is_err());
        assert!(parse("plog --L 9 --p 0.1 --v 0").is_err());
        assert!(parse("plog --L 9 --p 0.1 --trials 0").is_err());
        assert!(parse("adversarial --p 0.1 --r 4").is_err());
    }

    #[test]
    fn noise_specs() {
        let c = parse("tmem --L 64 --p 0.3 --noise blocked:7:32:four").unwrap();
        assert_eq!(
            c.noise,
            NoiseChoice::Blocked { r0: 7, stride: PairStride::Four, block_width: 32 }
        );
        let c = parse("tmem --L 64 --p 0.3 --noise single_pair:5 --stride four").unwrap();
        assert_eq!(c.noise, NoiseChoice::SinglePair { r0: 5, stride: PairStride::Four });
        assert!(parse("tmem --L 64 --p 0.3 --noise blocked:7").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"L": [9, 15], "p": "0.05:0.07:0.01", "Z": 4, "seed": 3, "modified_rules": true, "schedule": "poisson"}"#,
        )
        .unwrap();
        let c = parse(&format!("plog --config {} --seed 11", path.display())).unwrap();
        assert_eq!(c.ls, vec![9, 15]);
        assert_eq!(c.ps, vec![0.05, 0.06, 0.07]);
        assert_eq!(c.z, ZSpec::Fixed(4));
        assert_eq!(c.seed, 11);
        assert!(c.modified_rules);
        assert_eq!(c.schedule, ScheduleKind::Poisson);

        std::fs::write(&path, r#"{"L": 9, "p": 0.1, "colour": "red"}"#).unwrap();
        let err = parse(&format!("plog --config {}", path.display())).unwrap_err();
        assert!(err.to_string().contains("colour"));
    }
}
