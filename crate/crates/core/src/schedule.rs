//! Update schedules: when each part of the control lattice fires.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::Velocity;
use crate::code::Geometry;
use crate::error::{Error, Result};
use crate::rng::mix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScheduleKind {
    /// All sites update together once per unit time.
    Synchronous,
    /// Random sequential site updates, split between defect motion and
    /// message passing in the ratio `1 : v`.
    Poisson,
    /// Each column fires after gaps drawn uniformly from `[1-eps, 1+eps]`.
    UniformWindow { eps: f64 },
    /// Poisson proposals per column, accepted only when the column is not
    /// ahead of any neighbour in local time.
    MarchingSoldiers,
}

impl ScheduleKind {
    pub fn uniform_window(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "window half-width must lie in (0, 1), got {eps}"
            )));
        }
        Ok(ScheduleKind::UniformWindow { eps })
    }

    pub fn label(&self) -> String {
        match self {
            ScheduleKind::Synchronous => "sync".into(),
            ScheduleKind::Poisson => "poisson".into(),
            ScheduleKind::UniformWindow { eps } => format!("window:{eps}"),
            ScheduleKind::MarchingSoldiers => "marching".into(),
        }
    }

    /// Whether feedback is gated by cooldown bits.
    pub fn uses_cooldown(&self) -> bool {
        matches!(
            self,
            ScheduleKind::UniformWindow { .. } | ScheduleKind::MarchingSoldiers
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    /// One full synchronous round.
    Global,
    /// Relax the messages at a single control site.
    Message,
    /// Move the defect at a single control site, if any.
    Motion,
    /// Full local update of one column.
    Fire,
    /// Marching-soldiers proposal for one column.
    Propose,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Column for `Fire`/`Propose`, control site for `Message`/`Motion`.
    pub site: usize,
    pub action: Action,
}

/// Clocks and per-site random streams of a schedule.
#[derive(Clone, Debug)]
pub struct Schedule {
    pub kind: ScheduleKind,
    /// Next firing time of each column.
    clocks: Vec<f64>,
    /// Independent stream per column.
    pub site_rngs: Vec<ChaCha8Rng>,
    rng: ChaCha8Rng,
    /// Local time of each column (marching soldiers).
    pub t_sim: Vec<u64>,
    /// Number of firings of each column so far.
    pub fired: Vec<u64>,
    geom: Geometry,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, geom: Geometry, seed: u64) -> Self {
        let cols = geom.n_sites();
        let mut site_rngs: Vec<ChaCha8Rng> = (0..cols as u64)
            .map(|r| ChaCha8Rng::seed_from_u64(mix(seed, r)))
            .collect();
        let clocks = match kind {
            ScheduleKind::UniformWindow { .. } => {
                site_rngs.iter_mut().map(|g| g.random::<f64>()).collect()
            }
            ScheduleKind::MarchingSoldiers => site_rngs.iter_mut().map(exp1).collect(),
            _ => vec![0.0; cols],
        };
        Schedule {
            kind,
            clocks,
            site_rngs,
            rng: ChaCha8Rng::seed_from_u64(mix(seed, u64::MAX)),
            t_sim: vec![0; cols],
            fired: vec![0; cols],
            geom,
        }
    }

    /// Events in `[t0, t0 + 1)`, ordered by time and then by site.
    ///
    /// `active_sites` is the number of control sites taking part in
    /// per-site updates; `first_site` is the index of the first of them.
    pub fn next_events(&mut self, t0: f64, v: Velocity, first_site: usize, active_sites: usize) -> Vec<Event> {
        let t1 = t0 + 1.0;
        let mut events = Vec::new();
        match self.kind {
            ScheduleKind::Synchronous => events.push(Event {
                time: t0,
                site: 0,
                action: Action::Global,
            }),
            ScheduleKind::Poisson => {
                let v = match v {
                    Velocity::Finite(v) => v as f64,
                    Velocity::Relaxed => 1e9,
                };
                let p_motion = 1.0 / (1.0 + v);
                for i in 0..active_sites {
                    let site = first_site + self.rng.random_range(0..active_sites);
                    let action = if self.rng.random::<f64>() < p_motion {
                        Action::Motion
                    } else {
                        Action::Message
                    };
                    events.push(Event {
                        time: t0 + i as f64 / active_sites as f64,
                        site,
                        action,
                    });
                }
            }
            ScheduleKind::UniformWindow { eps } => {
                for r in 0..self.clocks.len() {
                    while self.clocks[r] < t1 {
                        events.push(Event {
                            time: self.clocks[r],
                            site: r,
                            action: Action::Fire,
                        });
                        let gap = self.site_rngs[r].random_range(1.0 - eps..=1.0 + eps);
                        self.clocks[r] += gap;
                    }
                }
            }
            ScheduleKind::MarchingSoldiers => {
                for r in 0..self.clocks.len() {
                    while self.clocks[r] < t1 {
                        events.push(Event {
                            time: self.clocks[r],
                            site: r,
                            action: Action::Propose,
                        });
                        let gap = exp1(&mut self.site_rngs[r]);
                        self.clocks[r] += gap;
                    }
                }
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.site.cmp(&b.site)));
        events
    }

    /// Marching-soldiers acceptance: the column may advance only if no
    /// neighbour lags behind it.
    pub fn accept(&self, r: usize) -> bool {
        let t = self.t_sim[r];
        (0..self.geom.d).all(|a| {
            [1, -1]
                .iter()
                .all(|&s| self.t_sim[self.geom.shift(r, a, s)] >= t)
        })
    }
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}
