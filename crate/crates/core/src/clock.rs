//! Time measurement for searches: wall clock or a deterministic virtual
//! clock driven by counted work.

use std::time::Instant;

use serde::{Deserialize, Serialize};

/// How elapsed time is measured.
///
/// The virtual clock converts elementary work (generated states, heuristic
/// calls and the heuristic's own step counter, setup included) into seconds
/// at a fixed rate, which makes timings and everything derived from them
/// reproducible bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clock {
    #[default]
    Wall,
    Virtual {
        seconds_per_unit: f64,
    },
}

impl Clock {
    pub fn is_virtual(&self) -> bool {
        matches!(self, Self::Virtual { .. })
    }

    pub fn start(self) -> Stopwatch {
        Stopwatch {
            clock: self,
            started: Instant::now(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    clock: Clock,
    started: Instant,
}

impl Stopwatch {
    /// Seconds since start; `units` is the work done so far and is only
    /// consulted by the virtual clock.
    pub fn elapsed(&self, units: u64) -> f64 {
        match self.clock {
            Clock::Wall => self.started.elapsed().as_secs_f64(),
            Clock::Virtual { seconds_per_unit } => units as f64 * seconds_per_unit,
        }
    }
}
