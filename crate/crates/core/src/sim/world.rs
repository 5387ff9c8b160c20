//! Continuous-time ground truth of one MEC episode.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::executor::{Completion, ExecutorState, TaskId};
use super::model::{self, ChannelParams, EnergyModel, TaskEnergy};
use crate::error::{ensure_positive, Error, Result};
use crate::rng::SimRng;

/// How tasks enter the system at each decision step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalMode {
    /// Exactly one task per step from a uniformly drawn user.
    #[default]
    Synchronous,
    /// Per-user Poisson arrivals feeding a FIFO queue; an empty queue idles the step.
    Poisson,
}

/// Simulator constants shared by every episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Decision steps per episode (T).
    pub steps: usize,
    pub step_duration_s: f64,
    pub num_users: usize,
    /// Arrival rate per user per step.
    pub lambda_p: f64,
    pub cycles_per_bit: f64,
    pub capacitance_coeff: f64,
    pub channel: ChannelParams,
    pub arrival: ArrivalMode,
    /// Overrides the load-balancing mean task size when set.
    pub mean_task_bits: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            step_duration_s: 1.0,
            num_users: 10,
            lambda_p: 0.1,
            cycles_per_bit: 1e3,
            capacitance_coeff: 5e-31,
            channel: ChannelParams::default(),
            arrival: ArrivalMode::Synchronous,
            mean_task_bits: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Domain("steps must be positive".into()));
        }
        if self.num_users == 0 {
            return Err(Error::Domain("num_users must be positive".into()));
        }
        ensure_positive("step_duration_s", self.step_duration_s)?;
        ensure_positive("lambda_p", self.lambda_p)?;
        ensure_positive("cycles_per_bit", self.cycles_per_bit)?;
        ensure_positive("capacitance_coeff", self.capacitance_coeff)?;
        if let Some(l) = self.mean_task_bits {
            ensure_positive("mean_task_bits", l)?;
        }
        self.channel.validate()
    }

    pub fn energy_model(&self) -> EnergyModel {
        EnergyModel {
            cycles_per_bit: self.cycles_per_bit,
            capacitance_coeff: self.capacitance_coeff,
            offload_power_w: self.channel.offload_power_w,
        }
    }

    /// Mean task size for servers running at `freqs_hz`.
    pub fn mean_task_size(&self, freqs_hz: &[f64]) -> Result<f64> {
        match self.mean_task_bits {
            Some(l) => Ok(l),
            None => model::balanced_mean_size(
                self.step_duration_s,
                freqs_hz,
                self.cycles_per_bit,
                self.lambda_p,
                self.num_users,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServerKind {
    Cloud,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerSpec {
    /// 0 is the cloud.
    pub id: usize,
    pub kind: ServerKind,
    pub cpu_freq_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: TaskId,
    pub user: usize,
    pub size_bits: f64,
    /// Step at which the task entered the system.
    pub arrival_step: usize,
}

/// The head-of-line task awaiting a decision, with its realised uplink.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingTask {
    pub spec: TaskSpec,
    /// `|h_{u,e}|^2` for every server.
    pub gains: Vec<f64>,
    /// Aggregate interference seen on each server (0 when disabled).
    pub interference_w: Vec<f64>,
    /// Achievable rate to every server, bits/s.
    pub rates: Vec<f64>,
}

/// Ground-truth accounting of one dispatched task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: TaskId,
    pub user: usize,
    pub server: usize,
    pub size_bits: f64,
    pub dispatched_at: f64,
    pub offload_delay_s: f64,
    /// Filled when the task completes.
    pub exec_delay_s: Option<f64>,
    pub offload_energy_j: f64,
    pub exec_energy_j: f64,
}

impl TaskRecord {
    pub fn total_delay(&self) -> Option<f64> {
        self.exec_delay_s.map(|x| x + self.offload_delay_s)
    }

    pub fn total_energy(&self) -> f64 {
        self.offload_energy_j + self.exec_energy_j
    }
}

/// Result of handing the head-of-line task to a server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispatch {
    pub task: TaskSpec,
    pub server: usize,
    pub rate_bps: f64,
    pub offload_delay_s: f64,
    pub energy: TaskEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct InFlight {
    task: TaskId,
    server: usize,
    size_bits: f64,
    arrives_at: f64,
}

/// Episode totals computed from completion events.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeTotals {
    pub tasks: usize,
    pub delay_s: f64,
    pub energy_j: f64,
}

/// Servers, executors, channels and task queue of one episode.
#[derive(Debug, Clone)]
pub struct SimWorld {
    cfg: SimConfig,
    energy: EnergyModel,
    servers: Vec<ServerSpec>,
    executors: Vec<ExecutorState>,
    /// `distances[user][server]` in metres.
    distances: Vec<Vec<f64>>,
    mean_size: f64,
    size_dist: Exp<f64>,
    step: usize,
    queue: VecDeque<TaskSpec>,
    current: Option<PendingTask>,
    in_flight: Vec<InFlight>,
    records: Vec<TaskRecord>,
    next_id: TaskId,
    rng: SimRng,
}

impl SimWorld {
    /// Builds an episode for servers running at `freqs_hz` (cloud first) and
    /// draws the first task.
    pub fn new(cfg: SimConfig, freqs_hz: &[f64], mut rng: SimRng) -> Result<Self> {
        cfg.validate()?;
        if freqs_hz.is_empty() {
            return Err(Error::Domain("a cloud server is required".into()));
        }
        let servers: Vec<ServerSpec> = freqs_hz
            .iter()
            .enumerate()
            .map(|(id, &f)| {
                ensure_positive("cpu frequency", f).map(|_| ServerSpec {
                    id,
                    kind: if id == 0 { ServerKind::Cloud } else { ServerKind::Edge },
                    cpu_freq_hz: f,
                })
            })
            .collect::<Result<_>>()?;
        let mean_size = cfg.mean_task_size(freqs_hz)?;
        let size_dist = Exp::new(1.0 / mean_size).map_err(|e| Error::Domain(e.to_string()))?;
        let distances = (0..cfg.num_users)
            .map(|_| {
                servers
                    .iter()
                    .map(|s| {
                        let [lo, hi] = match s.kind {
                            ServerKind::Cloud => cfg.channel.cloud_distance_m,
                            ServerKind::Edge => cfg.channel.edge_distance_m,
                        };
                        if hi > lo {
                            rng.random_range(lo..hi)
                        } else {
                            lo
                        }
                    })
                    .collect()
            })
            .collect();
        let mut world = Self {
            energy: cfg.energy_model(),
            executors: vec![ExecutorState::new(0.0); servers.len()],
            servers,
            distances,
            mean_size,
            size_dist,
            step: 0,
            queue: VecDeque::new(),
            current: None,
            in_flight: Vec::new(),
            records: Vec::new(),
            next_id: 0,
            rng,
            cfg,
        };
        world.begin_step();
        Ok(world)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn energy_model(&self) -> &EnergyModel {
        &self.energy
    }

    pub fn servers(&self) -> &[ServerSpec] {
        &self.servers
    }

    pub fn num_edges(&self) -> usize {
        self.servers.len() - 1
    }

    pub fn executor(&self, server: usize) -> &ExecutorState {
        &self.executors[server]
    }

    pub fn freq(&self, server: usize) -> f64 {
        self.servers[server].cpu_freq_hz
    }

    pub fn mean_task_size(&self) -> f64 {
        self.mean_size
    }

    /// Index of the current decision step (0-based).
    pub fn step_index(&self) -> usize {
        self.step
    }

    /// Start of the current step, seconds.
    pub fn now(&self) -> f64 {
        self.step as f64 * self.cfg.step_duration_s
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.cfg.steps
    }

    pub fn current_task(&self) -> Option<&PendingTask> {
        self.current.as_ref()
    }

    pub fn records(&self) -> &[TaskRecord] {
        &self.records
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.distances
    }

    fn begin_step(&mut self) {
        if self.is_finished() {
            self.current = None;
            return;
        }
        match self.cfg.arrival {
            ArrivalMode::Synchronous => {
                let user = self.rng.random_range(0..self.cfg.num_users);
                let size_bits = self.size_dist.sample(&mut self.rng);
                self.enqueue(user, size_bits);
            }
            ArrivalMode::Poisson => {
                let poisson = Poisson::new(self.cfg.lambda_p).expect("validated rate");
                for user in 0..self.cfg.num_users {
                    let k: f64 = poisson.sample(&mut self.rng);
                    for _ in 0..k as usize {
                        let size_bits = self.size_dist.sample(&mut self.rng);
                        self.enqueue(user, size_bits);
                    }
                }
            }
        }
        self.current = self.queue.pop_front().map(|spec| self.realise_channel(spec));
    }

    fn enqueue(&mut self, user: usize, size_bits: f64) {
        self.queue.push_back(TaskSpec {
            id: self.next_id,
            user,
            size_bits,
            arrival_step: self.step,
        });
        self.next_id += 1;
    }

    fn realise_channel(&mut self, spec: TaskSpec) -> PendingTask {
        let ch = &self.cfg.channel;
        let n_servers = self.servers.len();
        let (gains, interference_w) = if ch.interference_enabled {
            // every user's instantaneous gain to every server
            let all: Vec<Vec<f64>> = (0..self.cfg.num_users)
                .map(|u| {
                    (0..n_servers)
                        .map(|e| ch.draw_gain(&mut self.rng, self.distances[u][e]))
                        .collect()
                })
                .collect();
            let interference = (0..n_servers)
                .map(|e| {
                    (0..self.cfg.num_users)
                        .filter(|&u| u != spec.user)
                        .map(|u| ch.offload_power_w * all[u][e])
                        .sum()
                })
                .collect();
            (all[spec.user].clone(), interference)
        } else {
            let gains = (0..n_servers)
                .map(|e| ch.draw_gain(&mut self.rng, self.distances[spec.user][e]))
                .collect();
            (gains, vec![0.0; n_servers])
        };
        let rates = gains
            .iter()
            .zip(&interference_w)
            .map(|(&g, &i)| ch.data_rate(g, i))
            .collect();
        PendingTask {
            spec,
            gains,
            interference_w,
            rates,
        }
    }

    /// Sends the head-of-line task to `server`; it starts executing once
    /// the upload completes.
    pub fn dispatch(&mut self, server: usize) -> Result<Dispatch> {
        if server >= self.servers.len() {
            return Err(Error::MaskViolation {
                action: server,
                max_valid: self.servers.len() - 1,
            });
        }
        let pending = self
            .current
            .take()
            .ok_or_else(|| Error::Logic("no task awaiting a decision".into()))?;
        let rate = pending.rates[server];
        let offload = match model::offload_delay(pending.spec.size_bits, rate) {
            Ok(d) => d,
            Err(e) => {
                self.current = Some(pending);
                return Err(e);
            }
        };
        let energy = model::task_energy(pending.spec.size_bits, offload, &self.energy, self.freq(server));
        let now = self.now();
        self.records.push(TaskRecord {
            task: pending.spec.id,
            user: pending.spec.user,
            server,
            size_bits: pending.spec.size_bits,
            dispatched_at: now,
            offload_delay_s: offload,
            exec_delay_s: None,
            offload_energy_j: energy.offload_j,
            exec_energy_j: energy.exec_j,
        });
        self.in_flight.push(InFlight {
            task: pending.spec.id,
            server,
            size_bits: pending.spec.size_bits,
            arrives_at: now + offload,
        });
        Ok(Dispatch {
            task: pending.spec,
            server,
            rate_bps: rate,
            offload_delay_s: offload,
            energy,
        })
    }

    /// Runs the system to the start of the next step and draws its arrivals.
    ///
    /// An undecided head-of-line task stays at the front of the queue.
    pub fn end_step(&mut self) {
        let until = (self.step + 1) as f64 * self.cfg.step_duration_s;
        self.run_until(until);
        if let Some(p) = self.current.take() {
            self.queue.push_front(p.spec);
        }
        self.step += 1;
        self.begin_step();
    }

    /// Completes every upload and executes all resident work; afterwards
    /// every dispatched task has a ground-truth delay.
    pub fn drain(&mut self) {
        self.run_until(f64::INFINITY);
    }

    fn run_until(&mut self, until: f64) {
        self.in_flight
            .sort_by(|a, b| a.arrives_at.total_cmp(&b.arrives_at).then(a.task.cmp(&b.task)));
        let split = self.in_flight.partition_point(|f| f.arrives_at <= until);
        let arriving: Vec<InFlight> = self.in_flight.drain(..split).collect();
        let mut completions: Vec<Completion> = Vec::new();
        for f in arriving {
            let freq = self.servers[f.server].cpu_freq_hz;
            let done = self.executors[f.server]
                .admit(f.task, f.size_bits, f.arrives_at, freq, self.cfg.cycles_per_bit)
                .expect("task ids are unique and uploads arrive in order");
            completions.extend(done);
        }
        for (e, exec) in self.executors.iter_mut().enumerate() {
            completions.extend(exec.advance(self.servers[e].cpu_freq_hz, self.cfg.cycles_per_bit, until));
        }
        for c in completions {
            self.complete(c);
        }
    }

    fn complete(&mut self, c: Completion) {
        // records are indexed by dispatch order, which follows task ids only in synchronous mode
        let rec = self
            .records
            .iter_mut()
            .rev()
            .find(|r| r.task == c.task)
            .expect("completed task was dispatched");
        rec.exec_delay_s = Some(c.at - (rec.dispatched_at + rec.offload_delay_s));
    }

    /// Ground-truth totals over completed tasks.
    pub fn totals(&self) -> EpisodeTotals {
        let mut t = EpisodeTotals::default();
        for r in &self.records {
            t.energy_j += r.total_energy();
            if let Some(d) = r.total_delay() {
                t.delay_s += d;
                t.tasks += 1;
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn world(seed: u64, arrival: ArrivalMode) -> SimWorld {
        let cfg = SimConfig {
            steps: 20,
            arrival,
            ..SimConfig::default()
        };
        SimWorld::new(cfg, &[4e9, 2e9, 2e9], rng::stream(seed, 0)).unwrap()
    }

    fn run_round_robin(w: &mut SimWorld) {
        let mut k = 0;
        while !w.is_finished() {
            if w.current_task().is_some() {
                w.dispatch(k % 3).unwrap();
                k += 1;
            }
            w.end_step();
        }
        w.drain();
    }

    #[test]
    fn synchronous_mode_has_one_task_per_step() {
        let mut w = world(1, ArrivalMode::Synchronous);
        run_round_robin(&mut w);
        assert_eq!(w.records().len(), 20);
        for (i, r) in w.records().iter().enumerate() {
            assert_eq!(r.task, i);
            assert!(r.exec_delay_s.unwrap() > 0.0);
            assert!((r.dispatched_at - i as f64).abs() < 1e-12);
        }
        assert_eq!(w.totals().tasks, 20);
    }

    #[test]
    fn poisson_mode_can_idle() {
        let mut w = world(2, ArrivalMode::Poisson);
        let mut idle = 0;
        while !w.is_finished() {
            if w.current_task().is_some() {
                w.dispatch(0).unwrap();
            } else {
                idle += 1;
            }
            w.end_step();
        }
        w.drain();
        assert!(idle > 0);
        assert_eq!(w.records().len() + idle, 20);
    }

    #[test]
    fn identical_seeds_give_identical_episodes() {
        let mut a = world(9, ArrivalMode::Synchronous);
        let mut b = world(9, ArrivalMode::Synchronous);
        assert_eq!(a.distances(), b.distances());
        run_round_robin(&mut a);
        run_round_robin(&mut b);
        assert_eq!(a.records(), b.records());
    }

    #[test]
    fn distances_respect_disk_radii() {
        let w = world(3, ArrivalMode::Synchronous);
        for row in w.distances() {
            assert!((1000.0..=2000.0).contains(&row[0]));
            assert!(row[1..].iter().all(|d| (50.0..=500.0).contains(d)));
        }
    }

    #[test]
    fn energy_totals_decompose_per_task() {
        let mut w = world(4, ArrivalMode::Synchronous);
        run_round_robin(&mut w);
        let sum: f64 = w.records().iter().map(|r| r.offload_energy_j + r.exec_energy_j).sum();
        assert_eq!(sum, w.totals().energy_j);
    }

    #[test]
    fn dispatch_rejects_out_of_range_server() {
        let mut w = world(5, ArrivalMode::Synchronous);
        assert!(matches!(w.dispatch(3), Err(Error::MaskViolation { .. })));
        assert!(w.current_task().is_some());
    }

    #[test]
    fn default_channel_keeps_uploads_short() {
        // median upload over all user/server pairs at the E=6 operating point
        let cfg = SimConfig::default();
        let mut freqs = vec![4e9];
        freqs.extend([2e9; 6]);
        let mut delays = Vec::new();
        for seed in 0..40 {
            let mut w = SimWorld::new(cfg.clone(), &freqs, rng::stream(seed, 0)).unwrap();
            while !w.is_finished() {
                let p = w.current_task().unwrap();
                for &r in &p.rates {
                    delays.push(p.spec.size_bits / r);
                }
                let a = (w.step_index() + seed as usize) % freqs.len();
                w.dispatch(a).unwrap();
                w.end_step();
            }
        }
        delays.sort_by(f64::total_cmp);
        let median = delays[delays.len() / 2];
        assert!(median <= 0.1 * cfg.step_duration_s, "median upload {median}");
    }

    #[test]
    fn interference_lowers_rates() {
        let mut cfg = SimConfig::default();
        cfg.channel.interference_enabled = true;
        let w = SimWorld::new(cfg, &[4e9, 2e9], rng::stream(1, 0)).unwrap();
        let p = w.current_task().unwrap();
        assert!(p.interference_w.iter().all(|&i| i > 0.0));
        let clean = w.config().channel.clone();
        for e in 0..2 {
            let free = ChannelParams {
                interference_enabled: false,
                ..clean.clone()
            }
            .data_rate(p.gains[e], 0.0);
            assert!(p.rates[e] < free);
        }
    }
}
