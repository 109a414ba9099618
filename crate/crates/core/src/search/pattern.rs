//! Lateral search patterns: an Archimedean spiral sampled at constant arc
//! length, or concentric circles of growing radius.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    #[default]
    Spiral,
    Circles,
}

/// Arc length of r = b * phi from 0 to `phi`.
fn spiral_arc_length(b: f64, phi: f64) -> f64 {
    0.5 * b * (phi * (1.0 + phi * phi).sqrt() + phi.asinh())
}

/// k-th sample of the spiral r(phi) = pitch * phi / (2 pi), spaced `step_mm`
/// apart along the curve.
pub fn spiral_point(k: usize, pitch_mm: f64, step_mm: f64) -> (f64, f64) {
    if k == 0 {
        return (0.0, 0.0);
    }
    let b = pitch_mm / TAU;
    let s = k as f64 * step_mm;
    // Large-phi asymptote s ~ b phi^2 / 2 is a good starting point.
    let mut phi = (2.0 * s / b).sqrt();
    for _ in 0..100 {
        let f = spiral_arc_length(b, phi) - s;
        let df = b * (1.0 + phi * phi).sqrt();
        let next = (phi - f / df).max(0.0);
        let done = (next - phi).abs() <= 1e-15 * phi.max(1.0);
        phi = next;
        if done {
            break;
        }
    }
    let r = b * phi;
    (r * phi.cos(), r * phi.sin())
}

/// Samples on concentric circles of radius n * pitch, each circle sampled at
/// no more than `step_mm` of arc.
pub fn circles_point(k: usize, pitch_mm: f64, step_mm: f64) -> (f64, f64) {
    let mut remaining = k;
    if remaining == 0 {
        return (0.0, 0.0);
    }
    remaining -= 1;
    let mut ring = 1usize;
    loop {
        let r = ring as f64 * pitch_mm;
        let count = ring_count(r, step_mm);
        if remaining < count {
            let a = TAU * remaining as f64 / count as f64;
            return (r * a.cos(), r * a.sin());
        }
        remaining -= count;
        ring += 1;
    }
}

fn ring_count(r: f64, step_mm: f64) -> usize {
    ((TAU * r / step_mm).ceil() as usize).max(1)
}

/// Lazy sample sequence for a pattern, stopping once a sample lies beyond
/// `max_radius_mm`.
#[derive(Debug, Clone)]
pub struct Samples {
    pattern: Pattern,
    pitch_mm: f64,
    step_mm: f64,
    max_radius_mm: f64,
    k: usize,
    ring: usize,
    in_ring: usize,
}

impl Samples {
    pub fn new(pattern: Pattern, pitch_mm: f64, step_mm: f64, max_radius_mm: f64) -> Self {
        Self {
            pattern,
            pitch_mm,
            step_mm,
            max_radius_mm,
            k: 0,
            ring: 0,
            in_ring: 0,
        }
    }
}

impl Iterator for Samples {
    type Item = (usize, (f64, f64));

    fn next(&mut self) -> Option<Self::Item> {
        let p = match self.pattern {
            Pattern::Spiral => spiral_point(self.k, self.pitch_mm, self.step_mm),
            Pattern::Circles => {
                if self.k == 0 {
                    (0.0, 0.0)
                } else {
                    if self.ring == 0 || self.in_ring == ring_count(self.ring as f64 * self.pitch_mm, self.step_mm) {
                        self.ring += 1;
                        self.in_ring = 0;
                    }
                    let r = self.ring as f64 * self.pitch_mm;
                    let a = TAU * self.in_ring as f64 / ring_count(r, self.step_mm) as f64;
                    self.in_ring += 1;
                    (r * a.cos(), r * a.sin())
                }
            }
        };
        if p.0.hypot(p.1) > self.max_radius_mm {
            return None;
        }
        let k = self.k;
        self.k += 1;
        Some((k, p))
    }
}
