//! Processor-sharing execution on a single server.

use crate::error::{Error, Result};

pub type TaskId = usize;

/// A task resident on a server together with its unexecuted size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub task: TaskId,
    pub residual_bits: f64,
}

/// A task that finished executing at `at` (absolute seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completion {
    pub task: TaskId,
    pub at: f64,
}

/// Live state of one server: resident tasks and the instant they are valid at.
///
/// All resident tasks share the CPU equally, so while `n` tasks are present
/// each is executed at `f / (n * eta)` bits per second.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecutorState {
    entries: Vec<Entry>,
    clock: f64,
}

impl ExecutorState {
    pub fn new(clock: f64) -> Self {
        Self {
            entries: Vec::new(),
            clock,
        }
    }

    pub fn from_entries(entries: Vec<Entry>, clock: f64) -> Self {
        debug_assert!(entries.iter().all(|e| e.residual_bits > 0.0));
        Self { entries, clock }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Number of tasks being executed.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Residual sizes in ascending order.
    pub fn sorted_residuals(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.entries.iter().map(|e| e.residual_bits).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    /// Integrates the processor-sharing dynamics exactly up to `until` and
    /// returns every task that finished in `(clock, until]`.
    ///
    /// `until = f64::INFINITY` drains the executor.
    pub fn advance(&mut self, freq_hz: f64, eta: f64, until: f64) -> Vec<Completion> {
        debug_assert!(until >= self.clock, "advance backwards: {} -> {}", self.clock, until);
        let mut done = Vec::new();
        if until <= self.clock {
            return done;
        }
        let capacity = freq_hz / eta; // bits/s shared by all residents
        while !self.entries.is_empty() {
            let n = self.entries.len() as f64;
            let (min_idx, min_res) = self
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| (i, e.residual_bits))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty");
            let finish = self.clock + min_res * n / capacity;
            if finish > until {
                let work = (until - self.clock) * capacity / n;
                for e in &mut self.entries {
                    e.residual_bits -= work;
                }
                break;
            }
            for (i, e) in self.entries.iter_mut().enumerate() {
                if i == min_idx {
                    e.residual_bits = 0.0;
                } else {
                    e.residual_bits -= min_res;
                }
            }
            self.clock = finish;
            // ties finish together; keep the surviving order stable
            let mut finished: Vec<TaskId> = Vec::new();
            self.entries.retain(|e| {
                if e.residual_bits <= 0.0 {
                    finished.push(e.task);
                    false
                } else {
                    true
                }
            });
            done.extend(finished.into_iter().map(|task| Completion { task, at: finish }));
        }
        self.clock = until;
        done
    }

    /// Advances to `at` and then admits a new task with its full size.
    ///
    /// Completions that occur before `at` are returned.
    pub fn admit(&mut self, task: TaskId, size_bits: f64, at: f64, freq_hz: f64, eta: f64) -> Result<Vec<Completion>> {
        if self.entries.iter().any(|e| e.task == task) {
            return Err(Error::Logic(format!("task {task} is already resident")));
        }
        if at < self.clock {
            return Err(Error::Logic(format!(
                "admission at {at} precedes executor clock {}",
                self.clock
            )));
        }
        let done = self.advance(freq_hz, eta, at);
        if size_bits > 0.0 {
            self.entries.push(Entry {
                task,
                residual_bits: size_bits,
            });
        } else {
            // zero-size tasks complete on arrival
            return Ok(done.into_iter().chain([Completion { task, at }]).collect());
        }
        Ok(done)
    }
}
