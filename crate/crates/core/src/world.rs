//! A code sector coupled to its decoder and a noise source.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::{ControlState, DecoderConfig, Velocity};
use crate::code::CodeState;
use crate::error::Result;
use crate::noise::{NoiseEvent, NoiseKind, NoiseModel, RoundNoise};
use crate::rng::mix;
use crate::schedule::{Action, Schedule, ScheduleKind};

/// Outcome of a noiseless decoding run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Offline {
    /// The control lattice emptied before the cap.
    pub success: bool,
    pub rounds: u64,
    pub class: u8,
}

#[derive(Clone, Debug)]
pub struct World {
    pub cfg: DecoderConfig,
    pub code: CodeState,
    pub ctrl: ControlState,
    pub noise: NoiseModel,
    pub schedule: Schedule,
    pub rng: ChaCha8Rng,
    pub t: u64,
    /// Noise events applied so far, when recording is enabled.
    pub log: Option<Vec<NoiseEvent>>,
}

impl World {
    pub fn new(cfg: DecoderConfig, noise: NoiseModel, kind: ScheduleKind, seed: u64) -> Result<Self> {
        let ctrl = ControlState::new(&cfg)?;
        let code = CodeState::new(cfg.geometry());
        let schedule = Schedule::new(kind, cfg.geometry(), mix(seed, 0x5c4e));
        Ok(World {
            cfg,
            code,
            ctrl,
            noise,
            schedule,
            rng: ChaCha8Rng::seed_from_u64(seed),
            t: 0,
            log: None,
        })
    }

    pub fn record_noise(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    fn draw_noise(&mut self) -> RoundNoise {
        let rn = self.noise.sample(&self.code, &mut self.rng, self.t);
        for &l in &rn.flips {
            self.code.flip_error(l);
        }
        if let Some(log) = self.log.as_mut() {
            log.extend(rn.flips.iter().map(|&l| NoiseEvent {
                round: self.t,
                location: l,
                kind: NoiseKind::Flip,
            }));
            log.extend(rn.faults.iter().map(|&s| NoiseEvent {
                round: self.t,
                location: s,
                kind: NoiseKind::Fault,
            }));
        }
        rn
    }

    /// Drift, then measure everything and ingest the changes at layer 0.
    fn ingest_all(&mut self, faults: &[usize]) {
        self.ctrl.vertical_drift(self.cfg.modified_rules);
        self.code.measure_with_faults(faults);
        let deltas = self.code.syndrome_deltas();
        self.ctrl.ingest_defects(&deltas);
    }

    /// One synchronous round: noise, drift, measurement, ingestion, message
    /// passing and feedback.
    pub fn step_synchronous(&mut self) {
        let rn = self.draw_noise();
        self.sync_update(&rn.faults);
        self.t += 1;
    }

    fn sync_update(&mut self, faults: &[usize]) {
        self.ingest_all(faults);
        self.ctrl.message_cycle(self.cfg.v);
        self.ctrl.apply_feedback(&mut self.code, &self.cfg);
    }

    /// Advance by one unit of time under the configured schedule.
    pub fn step(&mut self) {
        if self.schedule.kind == ScheduleKind::Synchronous {
            self.step_synchronous();
            return;
        }
        let rn = self.draw_noise();
        let lat = &self.ctrl.lat;
        let first = if lat.z == 0 { 0 } else { lat.layer };
        let active = lat.n - first;
        if self.schedule.kind == ScheduleKind::Poisson {
            self.ingest_all(&rn.faults);
        }
        let events = self.schedule.next_events(self.t as f64, self.cfg.v, first, active);
        for ev in events {
            match ev.action {
                Action::Global => self.sync_update(&rn.faults),
                Action::Message => self.ctrl.relax_site(ev.site),
                Action::Motion => {
                    if self.ctrl.s[ev.site] {
                        self.ctrl.feedback_on(&mut self.code, &[ev.site], &self.cfg);
                    }
                }
                Action::Fire => self.fire_column(ev.site),
                Action::Propose => {
                    if self.schedule.accept(ev.site) {
                        self.schedule.t_sim[ev.site] += 1;
                        self.fire_column(ev.site);
                    }
                }
            }
        }
        self.t += 1;
    }

    /// Full local update of column `r`: drift, measure, ingest, relax
    /// messages and move defects whose cooldown has expired.
    pub fn fire_column(&mut self, r: usize) {
        self.schedule.fired[r] += 1;
        let p_meas = self.noise.meas_rate();
        let fault = p_meas > 0.0 && self.schedule.site_rngs[r].random_bool(p_meas);
        if fault {
            if let Some(log) = self.log.as_mut() {
                log.push(NoiseEvent {
                    round: self.t,
                    location: r,
                    kind: NoiseKind::Fault,
                });
            }
        }
        self.ctrl.drift_column(r, self.cfg.modified_rules);
        self.code.measure_site(r, fault);
        if self.code.take_delta(r) {
            self.ctrl.ingest_defects(&[r]);
        }
        let lat = std::sync::Arc::clone(&self.ctrl.lat);
        let sweeps = self.cfg.v.substeps(self.ctrl.m_max);
        let layers: Vec<usize> = (0..=lat.z).filter(|&z| lat.is_active(z)).collect();
        for _ in 0..sweeps {
            for &z in &layers {
                self.ctrl.relax_site(lat.site(z, r));
            }
        }
        let cooldown = self.schedule.kind.uses_cooldown();
        let movers: Vec<usize> = layers
            .iter()
            .map(|&z| lat.site(z, r))
            .filter(|&x| self.ctrl.s[x] && !(cooldown && self.ctrl.c[x]))
            .collect();
        for &z in &layers {
            self.ctrl.c[lat.site(z, r)] = false;
        }
        let landed = self.ctrl.feedback_on(&mut self.code, &movers, &self.cfg);
        if cooldown {
            for x in landed {
                self.ctrl.c[x] = true;
            }
        }
    }

    pub fn run(&mut self, units: u64) {
        for _ in 0..units {
            self.step();
        }
    }

    pub fn defect_count(&self) -> usize {
        self.ctrl.defect_count()
    }

    /// No defect anywhere and nothing left to report: the code is
    /// syndrome-free and the reference syndrome agrees with it.
    pub fn is_settled(&self) -> bool {
        self.ctrl.is_empty()
            && (0..self.code.geom.n_sites())
                .all(|s| !self.code.anyon_at(s) && self.code.sigma_prev[s] == 1)
    }

    /// Run the decoder synchronously without noise until the control lattice
    /// is empty, on a copy of the current state. A settled state takes zero
    /// rounds.
    pub fn offline_decode(&self, cap: u64) -> Offline {
        if self.is_settled() {
            return Offline {
                success: true,
                rounds: 0,
                class: self.code.logical_class(),
            };
        }
        let mut w = World {
            cfg: self.cfg.clone(),
            code: self.code.clone(),
            ctrl: self.ctrl.clone(),
            noise: NoiseModel::Silent,
            schedule: self.schedule.clone(),
            rng: self.rng.clone(),
            t: self.t,
            log: None,
        };
        w.schedule.kind = ScheduleKind::Synchronous;
        let mut rounds = 0;
        while rounds < cap {
            w.step_synchronous();
            rounds += 1;
            if w.ctrl.is_empty() {
                return Offline {
                    success: true,
                    rounds,
                    class: w.code.logical_class(),
                };
            }
        }
        Offline {
            success: false,
            rounds,
            class: w.code.logical_class(),
        }
    }
}

/// Default cap for noiseless decoding runs.
pub fn default_cap(cfg: &DecoderConfig) -> u64 {
    let per_round = match cfg.v {
        Velocity::Finite(v) => u64::from(v),
        Velocity::Relaxed => cfg.l as u64,
    };
    (cfg.z as u64 + 1) * 4 + 40 * cfg.l as u64 * cfg.d as u64 / per_round.min(3) + 100
}
