use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::momdp::{EncodedState, EncodingConfig, VectorReward};

/// One stored decision. Both the scalarised and the raw vector reward are
/// kept so losses can be recomputed under other weightings.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: EncodedState,
    pub action: usize,
    pub scalar_reward: f64,
    pub reward: VectorReward,
    pub next_state: EncodedState,
    pub done: bool,
    pub context_id: u64,
}

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next insert overwrites once the ring is full.
    head: usize,
    inserted: u64,
}

const MAGIC: &[u8; 8] = b"MECRPL\0\x01";

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Domain("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            head: 0,
            inserted: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Total inserts since creation, including evicted ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if !t.state.is_valid_action(t.action) {
            return Err(Error::MaskViolation {
                action: t.action,
                max_valid: t.state.num_edges,
            });
        }
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
        self.inserted += 1;
        Ok(())
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items[self.head..].iter().chain(&self.items[..self.head])
    }

    /// `n` draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<&Transition>> {
        if self.items.is_empty() {
            return Err(Error::Logic("cannot sample from an empty replay buffer".into()));
        }
        Ok((0..n)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect())
    }

    /// Little-endian dump, oldest first.
    pub fn to_bytes(&self, config: &EncodingConfig) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(config.max_edges as u32).to_le_bytes());
        out.extend_from_slice(&(config.hist_bins as u32).to_le_bytes());
        out.extend_from_slice(&(self.capacity as u64).to_le_bytes());
        out.extend_from_slice(&self.inserted.to_le_bytes());
        out.extend_from_slice(&(self.items.len() as u64).to_le_bytes());
        for t in self.iter() {
            t.state.write_le(&mut out);
            out.extend_from_slice(&(t.action as u32).to_le_bytes());
            for v in [t.scalar_reward, t.reward.time, t.reward.energy] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            t.next_state.write_le(&mut out);
            out.push(t.done as u8);
            out.extend_from_slice(&t.context_id.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, EncodingConfig)> {
        let short = || Error::Format("truncated replay file".into());
        let mut pos = 0;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(short)?;
            pos += n;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(Error::Format("bad replay magic".into()));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize;
        let u64_at = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes"));
        let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
        let config = EncodingConfig::new(u32_at(take(4)?), u32_at(take(4)?))?;
        let mut buf = Self::new(u64_at(take(8)?) as usize)?;
        let inserted = u64_at(take(8)?);
        let n = u64_at(take(8)?) as usize;
        let state_bytes = EncodedState::record_len(&config) * 8;
        for _ in 0..n {
            let state = EncodedState::read_le(config, take(state_bytes)?)?;
            let action = u32_at(take(4)?);
            let scalar_reward = f64_at(take(8)?);
            let reward = VectorReward {
                time: f64_at(take(8)?),
                energy: f64_at(take(8)?),
            };
            let next_state = EncodedState::read_le(config, take(state_bytes)?)?;
            let done = take(1)?[0] != 0;
            let context_id = u64_at(take(8)?);
            buf.push(Transition {
                state,
                action,
                scalar_reward,
                reward,
                next_state,
                done,
                context_id,
            })?;
        }
        if pos != bytes.len() {
            return Err(Error::Format("trailing bytes in replay file".into()));
        }
        buf.inserted = inserted;
        Ok((buf, config))
    }

    pub fn save(&self, path: impl AsRef<Path>, config: &EncodingConfig) -> Result<()> {
        fs::write(path, self.to_bytes(config))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, EncodingConfig)> {
        Self::from_bytes(&fs::read(path)?)
    }
}
