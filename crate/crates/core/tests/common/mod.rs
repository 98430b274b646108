//! Seeded checks of the simulator's structural invariants, shared by the
//! property tests and the acceptance run. Each check draws a random
//! instance from its seed and returns a description of the first
//! violation.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use confine::automaton::{ControlState, DecoderConfig, Lattice, Velocity, INF};
use confine::code::{CodeState, Geometry};
use confine::experiments::clusters::{cluster_decompose, Point};
use confine::noise::{NoiseModel, PairStride, Replay, SinglePair};
use confine::schedule::ScheduleKind;
use confine::world::World;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_config(rng: &mut ChaCha8Rng) -> DecoderConfig {
    let d = rng.random_range(1..=2);
    let l = if d == 1 { rng.random_range(3..=12) } else { rng.random_range(3..=6) };
    let z = rng.random_range(0..=5);
    let v = Velocity::Finite(rng.random_range(1..=4));
    let mut cfg = DecoderConfig::new(d, l, z).unwrap().with_v(v).unwrap();
    cfg.modified_rules = rng.random_bool(0.2);
    cfg.greedy_adjacent_fuse = rng.random_bool(0.2);
    cfg
}

fn random_schedule(rng: &mut ChaCha8Rng) -> ScheduleKind {
    match rng.random_range(0..4) {
        0 => ScheduleKind::Synchronous,
        1 => ScheduleKind::Poisson,
        2 => ScheduleKind::uniform_window(rng.random_range(0.05..0.95)).unwrap(),
        _ => ScheduleKind::MarchingSoldiers,
    }
}

fn noisy_world(rng: &mut ChaCha8Rng, kind: ScheduleKind) -> World {
    let cfg = random_config(rng);
    let p = rng.random_range(0.0..0.2);
    let pm = rng.random_range(0.0..0.2);
    World::new(cfg, NoiseModel::iid(p, pm, false).unwrap(), kind, rng.random()).unwrap()
}

/// A defect-free world without noise never changes.
pub fn quiescence(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = random_config(&mut rng);
    let kind = random_schedule(&mut rng);
    let mut w = World::new(cfg.clone(), NoiseModel::Silent, kind, seed).unwrap();
    for t in 0..3 * cfg.l {
        w.step();
        ensure(w.ctrl.is_empty(), || format!("defect appeared at t={t}"))?;
        ensure(w.ctrl.m.iter().all(|&m| m == INF), || format!("message appeared at t={t}"))?;
        ensure(w.code.errors.iter().chain(&w.code.corrections).all(|b| !b), || {
            format!("frame changed at t={t}")
        })?;
        ensure(w.is_settled(), || format!("reference syndrome changed at t={t}"))?;
    }
    Ok(())
}

/// The true syndrome of `E xor C` has an even number of -1 sites after
/// every step, under every schedule.
pub fn defect_parity(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = random_schedule(&mut rng);
    let mut w = noisy_world(&mut rng, kind);
    for t in 0..40 {
        w.step();
        let n = w.code.anyons().len();
        ensure(n % 2 == 0, || format!("{n} anyons at t={t} under {kind:?}"))?;
    }
    Ok(())
}

/// Drift, messaging and feedback never change the parity of the number of
/// control-lattice defects; ingestion toggles exactly the reported sites.
pub fn layer_parity(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = random_config(&mut rng);
    let mut ctrl = ControlState::new(&cfg).unwrap();
    let mut code = CodeState::new(cfg.geometry());
    for x in 0..ctrl.lat.n {
        ctrl.s[x] = rng.random_bool(0.15);
    }
    for step in 0..30 {
        let before = ctrl.defect_count() % 2;
        let op = rng.random_range(0..4);
        match op {
            0 => ctrl.vertical_drift(cfg.modified_rules),
            1 => ctrl.message_cycle(cfg.v),
            2 => ctrl.apply_feedback(&mut code, &cfg),
            _ => {
                let r = rng.random_range(0..ctrl.lat.layer);
                ctrl.drift_column(r, cfg.modified_rules);
            }
        }
        let after = ctrl.defect_count() % 2;
        ensure(before == after, || format!("op {op} changed parity at step {step}"))?;
        let sites: Vec<usize> = (0..ctrl.lat.layer).filter(|_| rng.random_bool(0.1)).collect();
        let old = ctrl.s.clone();
        ctrl.ingest_defects(&sites);
        for r in 0..ctrl.lat.layer {
            let toggled = old[r] != ctrl.s[r];
            ensure(toggled == sites.contains(&r), || format!("ingest mismatch at {r}"))?;
        }
    }
    Ok(())
}

/// Corrections never show up as syndrome changes, applying a correction
/// set twice is the identity, and closed contractible loops leave the
/// logical class alone.
pub fn frame_soundness(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=2);
    let g = Geometry::new(d, if d == 1 { 11 } else { 5 }).unwrap();
    let mut code = CodeState::new(g);
    code.randomize_errors(&mut rng);
    code.measure_with_faults(&[]);
    code.syndrome_deltas();
    for round in 0..10 {
        let links: Vec<usize> = (0..g.n_links()).filter(|_| rng.random_bool(0.3)).collect();
        let (c0, s0) = (code.corrections.clone(), code.sigma_prev.clone());
        for &l in &links {
            code.apply_correction(l);
        }
        code.measure_with_faults(&[]);
        let deltas = code.syndrome_deltas();
        ensure(deltas.is_empty(), || format!("round {round}: corrections reported at {deltas:?}"))?;
        for &l in &links {
            code.apply_correction(l);
        }
        ensure(code.corrections == c0 && code.sigma_prev == s0, || {
            format!("round {round}: double application is not the identity")
        })?;
        for &l in &links {
            code.apply_correction(l);
        }
    }
    if d == 2 {
        let class = code.logical_class();
        let anyons = code.anyons();
        for site in 0..g.n_sites() {
            if rng.random_bool(0.4) {
                let x = g.shift(site, 0, 1);
                let y = g.shift(site, 1, 1);
                for l in [g.link(site, 0), g.link(x, 1), g.link(y, 0), g.link(site, 1)] {
                    code.apply_correction(l);
                }
            }
        }
        ensure(code.logical_class() == class, || "plaquettes changed the class".into())?;
        ensure(code.anyons() == anyons, || "plaquettes moved anyons".into())?;
    }
    Ok(())
}

/// Every finite message is explained by a defect inside its causal cone:
/// after `t` sub-steps from an empty message field, the message in
/// direction `k` at `x` with value `m` has a source defect `j` sites behind
/// it along `k`, with `1 <= j <= t + 1`, no transverse offset larger than
/// `j`, and `j` plus the transverse offsets at most `m`.
pub fn message_causality(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = random_config(&mut rng);
    let mut ctrl = ControlState::new(&cfg).unwrap();
    let lat = ctrl.lat.clone();
    let active: Vec<usize> = (0..lat.n).filter(|&x| lat.is_active(lat.height(x))).collect();
    for &x in &active {
        ctrl.s[x] = rng.random_bool(0.05);
    }
    let defects = ctrl.defects();
    let g = lat.geom;
    let d = g.d;
    let coords = |x: usize| -> (Vec<usize>, i64) {
        let r = lat.column(x);
        ((0..d).map(|a| g.coord(r, a)).collect(), lat.height(x) as i64)
    };
    let substeps = rng.random_range(1..=6);
    for t in 1..=substeps {
        ctrl.source_messages();
        ctrl.propagate_messages();
        for k in 0..lat.ndirs {
            for x in 0..lat.n {
                let m = ctrl.msg(k, x);
                if m == INF {
                    continue;
                }
                ensure(m <= ctrl.m_max, || format!("message {m} above m_max"))?;
                let (xc, xz) = coords(x);
                let axis = Lattice::axis(k);
                let sign = Lattice::sign(k) as i64;
                let explained = defects.iter().any(|&u| {
                    let (uc, uz) = coords(u);
                    // Along a periodic axis the wavefront may have wrapped.
                    let mut j = if axis == d {
                        sign * (xz - uz)
                    } else {
                        (sign * (xc[axis] as i64 - uc[axis] as i64)).rem_euclid(g.l as i64)
                    };
                    if j == 0 && axis != d {
                        j = g.l as i64;
                    }
                    if j < 1 || j > t + 1 {
                        return false;
                    }
                    let mut trans = Vec::new();
                    for a in 0..d {
                        if a != axis {
                            trans.push(g.min_image(lat.column(u), lat.column(x), a).abs());
                        }
                    }
                    if axis != d {
                        trans.push((xz - uz).abs());
                    }
                    trans.iter().all(|&o| o <= j) && j + trans.iter().sum::<i64>() <= i64::from(m)
                });
                ensure(explained, || format!("message k={k} at {x} = {m} after {t} sub-steps has no source"))?;
            }
        }
    }
    Ok(())
}

/// Marching-soldiers local clocks of neighbouring columns never differ by
/// more than one.
pub fn marching_neighbours(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = noisy_world(&mut rng, ScheduleKind::MarchingSoldiers);
    let g = w.code.geom;
    for t in 0..30 {
        w.step();
        for r in 0..g.n_sites() {
            for a in 0..g.d {
                let n = g.shift(r, a, 1);
                let (x, y) = (w.schedule.t_sim[r], w.schedule.t_sim[n]);
                ensure(x.abs_diff(y) <= 1, || format!("t_sim {x} vs {y} at t={t}"))?;
            }
        }
    }
    Ok(())
}

/// Uniform-window columns fire between `floor((T-1)/(1+eps))` and
/// `1 + T/(1-eps)` times in `T` units, which bounds how far a defect can
/// be carried per unit of wall-clock time.
pub fn window_speed_limit(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = rng.random_range(0.05..0.95);
    let mut w = noisy_world(&mut rng, ScheduleKind::uniform_window(eps).unwrap());
    let layers = w.cfg.z + 1;
    for t in 1..=40u64 {
        let before = w.code.corrections.clone();
        w.step();
        let tf = t as f64;
        let hi = (1.0 + tf / (1.0 - eps)).floor() as u64;
        let lo = ((tf - 1.0) / (1.0 + eps)).floor() as u64;
        for (r, &n) in w.schedule.fired.iter().enumerate() {
            ensure(n >= lo && n <= hi, || format!("column {r} fired {n} times by t={t}, eps={eps}"))?;
        }
        // Each firing moves each of the column's defects at most one site.
        let changed = before.iter().zip(&w.code.corrections).filter(|(a, b)| a != b).count();
        let g = w.code.geom;
        let budget = (1.0 + 1.0 / (1.0 - eps)).ceil() as usize * layers * 2 * g.n_sites();
        ensure(changed <= budget, || format!("{changed} corrections in one unit"))?;
    }
    Ok(())
}

fn same_state(a: &World, b: &World) -> bool {
    a.code.errors == b.code.errors
        && a.code.corrections == b.code.corrections
        && a.code.sigma_prev == b.code.sigma_prev
        && a.ctrl.s == b.ctrl.s
        && a.ctrl.m == b.ctrl.m
        && a.ctrl.c == b.ctrl.c
        && a.schedule.t_sim == b.schedule.t_sim
}

/// Identical configuration and seed give identical trajectories.
pub fn determinism(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = random_schedule(&mut rng);
    let mut a = noisy_world(&mut rng, kind);
    let mut b = a.clone();
    for t in 0..25 {
        a.step();
        b.step();
        ensure(same_state(&a, &b), || format!("diverged at t={t} under {kind:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind2 = random_schedule(&mut rng);
    let mut c = noisy_world(&mut rng, kind2);
    c.run(25);
    ensure(same_state(&a, &c), || "rebuilt world diverged".into())
}

/// Replaying a recorded noise log reproduces the run. Applies to the
/// schedules whose measurement faults are drawn globally.
pub fn replay(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = if rng.random_bool(0.5) { ScheduleKind::Synchronous } else { ScheduleKind::Poisson };
    let w0 = noisy_world(&mut rng, kind);
    let seed_w = rng.random::<u64>();
    let mut a = World::new(w0.cfg.clone(), w0.noise.clone(), kind, seed_w).unwrap().record_noise();
    a.run(30);
    let log = a.log.clone().unwrap();
    let mut b = World::new(w0.cfg.clone(), NoiseModel::Replay(Replay::from_events(&log)), kind, seed_w).unwrap();
    b.run(30);
    ensure(same_state(&a, &b), || format!("replay diverged under {kind:?}"))
}

/// Ingesting a multiset of sites toggles each by its multiplicity mod 2.
pub fn xor_fusion(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = random_config(&mut rng);
    let mut ctrl = ControlState::new(&cfg).unwrap();
    let layer = ctrl.lat.layer;
    let sites: Vec<usize> = (0..rng.random_range(0..3 * layer)).map(|_| rng.random_range(0..layer)).collect();
    ctrl.ingest_defects(&sites);
    for r in 0..layer {
        let odd = sites.iter().filter(|&&s| s == r).count() % 2 == 1;
        ensure(ctrl.s[r] == odd, || format!("site {r} after {sites:?}"))?;
    }
    Ok(())
}

/// Level-k survivor counts of the cluster decomposition never grow.
pub fn cluster_monotone(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=3);
    let pts: Vec<Point> = (0..rng.random_range(0..40))
        .map(|_| (0..dim).map(|_| rng.random_range(0..50)).collect())
        .collect();
    let w = rng.random_range(1..3);
    let b = w + rng.random_range(1..4);
    let n = rng.random_range(2..5);
    let s = cluster_decompose(&pts, w, b, n, 4).unwrap().survivors();
    ensure(s.windows(2).all(|p| p[1] <= p[0]), || format!("survivors {s:?}"))
}

/// The single-pair adversary creates anyons mirror-symmetrically about
/// the tracked pair and always changes the anyon count by an even number.
pub fn pair_noise_symmetry(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.random_range(20..60);
    let r = 2 * rng.random_range(1..(l / 4)) + 1;
    let stride = if rng.random_bool(0.5) { PairStride::Three } else { PairStride::Four };
    let sp = SinglePair::new(rng.random_range(0.0..1.0), r).unwrap().with_stride(stride);
    let mut code = CodeState::new(Geometry::new(1, l).unwrap());
    let a = rng.random_range(0..l);
    for i in 0..r {
        code.flip_error((a + i) % l);
    }
    let before = code.anyons().len();
    let rn = NoiseModel::SinglePair(sp).sample(&code, &mut rng, 0);
    for &f in &rn.flips {
        code.flip_error(f);
    }
    let anyons = code.anyons();
    ensure((anyons.len() + before) % 2 == 0, || "odd change in anyon count".into())?;
    let mirror = |s: usize| (2 * a + r + 2 * l - s) % l;
    ensure(anyons.iter().all(|&s| anyons.contains(&mirror(s))), || {
        format!("asymmetric anyons {anyons:?} about pair at {a}+{r}")
    })
}

/// Without noise, every schedule removes a small burst completely and
/// leaves the logical class trivial.
pub fn schedule_agreement(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.random_range(9..=17);
    let cfg = DecoderConfig::new(1, l, 8).unwrap();
    let start = rng.random_range(0..l);
    let width = rng.random_range(1..=2);
    for kind in [
        ScheduleKind::Synchronous,
        ScheduleKind::Poisson,
        ScheduleKind::uniform_window(0.5).unwrap(),
        ScheduleKind::MarchingSoldiers,
    ] {
        let mut w = World::new(cfg.clone(), NoiseModel::Silent, kind, rng.random()).unwrap();
        for i in 0..width {
            w.code.flip_error((start + i) % l);
        }
        w.run(60);
        ensure(w.is_settled(), || format!("{kind:?} left defects"))?;
        ensure(w.code.logical_class() == 0, || format!("{kind:?} flipped the logical"))?;
    }
    Ok(())
}

/// Every named check, for running them all over a range of seeds.
pub const ALL: &[(&str, fn(u64) -> Check)] = &[
    ("quiescence", quiescence),
    ("defect parity", defect_parity),
    ("layer parity", layer_parity),
    ("frame soundness", frame_soundness),
    ("message causality", message_causality),
    ("marching neighbours", marching_neighbours),
    ("window speed limit", window_speed_limit),
    ("determinism", determinism),
    ("replay", replay),
    ("xor fusion", xor_fusion),
    ("cluster monotone", cluster_monotone),
    ("pair noise symmetry", pair_noise_symmetry),
    ("schedule agreement", schedule_agreement),
];
