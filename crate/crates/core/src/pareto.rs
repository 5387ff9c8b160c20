//! Dominance, front extraction and exact two-objective hypervolume.
//!
//! Both coordinates are costs (delay in seconds, energy in joules): smaller
//! is better, and a point dominates another when it is no worse on both
//! and strictly better on one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean evaluated performance of one scheduler at one preference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfPoint {
    pub delay: f64,
    pub energy: f64,
    /// Delay weight of the preference (or cloud probability for random-p).
    pub preference: f64,
    pub label: String,
}

impl PerfPoint {
    pub fn new(delay: f64, energy: f64) -> Self {
        Self {
            delay,
            energy,
            preference: 0.0,
            label: String::new(),
        }
    }

    pub fn labelled(delay: f64, energy: f64, preference: f64, label: impl Into<String>) -> Self {
        Self {
            delay,
            energy,
            preference,
            label: label.into(),
        }
    }

    fn is_finite(&self) -> bool {
        self.delay.is_finite() && self.energy.is_finite()
    }
}

pub fn dominates(a: &PerfPoint, b: &PerfPoint) -> bool {
    a.delay <= b.delay && a.energy <= b.energy && (a.delay < b.delay || a.energy < b.energy)
}

/// Undominated subset sorted by ascending delay (then energy). Of several
/// identical points only the first of each label is kept.
pub fn pareto_front(points: &[PerfPoint]) -> Result<Vec<PerfPoint>> {
    if points.is_empty() {
        return Err(Error::Domain("front of an empty point set".into()));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite performance point ({}, {})",
            p.delay, p.energy
        )));
    }
    let mut sorted: Vec<&PerfPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.delay.total_cmp(&b.delay).then(a.energy.total_cmp(&b.energy)));
    let mut front: Vec<PerfPoint> = Vec::new();
    let mut best_energy = f64::INFINITY;
    for p in sorted {
        if p.energy < best_energy {
            best_energy = p.energy;
            front.push(p.clone());
        } else if let Some(last) = front.last() {
            // exact duplicate of the last kept point: keep one per label
            let dup_of_kept = front
                .iter()
                .rev()
                .take_while(|q| q.delay == last.delay && q.energy == last.energy)
                .any(|q| q.label == p.label);
            if p.delay == last.delay && p.energy == last.energy && !dup_of_kept {
                front.push(p.clone());
            }
        }
    }
    Ok(front)
}

/// Exact area dominated by `front` and bounded by `reference`.
///
/// Points that do not dominate the reference contribute nothing and are
/// reported with a warning. Points equal to the reference contribute 0.
pub fn hypervolume(front: &[PerfPoint], reference: &PerfPoint) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(front.len());
    for p in front {
        if p.delay <= reference.delay && p.energy <= reference.energy {
            pts.push((p.delay, p.energy));
        } else {
            log::warn!(
                "point ({}, {}) of {:?} does not dominate the reference; excluded",
                p.delay,
                p.energy,
                p.label
            );
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut ceiling = reference.energy;
    // Horizontal slabs: each point that lowers the staircase adds the strip
    // between its energy and the previous one, reaching to the reference delay.
    for &(x, y) in &pts {
        if y >= ceiling {
            continue;
        }
        area += (reference.delay - x) * (ceiling - y);
        ceiling = y;
    }
    area
}

/// Componentwise maximum over every point of every front.
pub fn reference_point(fronts: &[&[PerfPoint]]) -> Result<PerfPoint> {
    let mut it = fronts.iter().flat_map(|f| f.iter()).peekable();
    if it.peek().is_none() {
        return Err(Error::Domain("reference point of no points".into()));
    }
    let (d, e) = it.fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(d, e), p| {
        (d.max(p.delay), e.max(p.energy))
    });
    Ok(PerfPoint::labelled(d, e, 0.0, "reference"))
}

/// Divides both coordinates by the mean task size in Mbit.
pub fn per_mbit(point: &PerfPoint, mean_size_bits: f64) -> Result<PerfPoint> {
    if mean_size_bits.is_nan() || mean_size_bits <= 0.0 {
        return Err(Error::Domain(format!(
            "mean task size must be positive, got {mean_size_bits}"
        )));
    }
    let mbit = mean_size_bits / 1e6;
    Ok(PerfPoint {
        delay: point.delay / mbit,
        energy: point.energy / mbit,
        ..point.clone()
    })
}

/// Hypervolume divided by the area of the box spanned by the origin and the
/// reference point.
pub fn normalized_hypervolume(hv: f64, reference: &PerfPoint) -> f64 {
    let box_area = reference.delay * reference.energy;
    if box_area > 0.0 {
        hv / box_area
    } else {
        0.0
    }
}
