//! Synthetic stand-in for the primary-school contact data.
//!
//! 232 pupils in ten classes (1A to 5B) with class sizes matching the public
//! dataset. Contacts are drawn slot by slot, where the slots are the windows
//! of the morning and afternoon periods. Within a slot, a pair from the same
//! class meets with probability [`P_WITHIN`] and a pair from different
//! classes with probability [`P_ACROSS`]. Every meeting yields between one
//! and three contact records on the 20-second grid of the slot.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{ContactEvent, Period};
use crate::rng;

pub const CLASS_NAMES: [&str; 10] = ["1A", "1B", "2A", "2B", "3A", "3B", "4A", "4B", "5A", "5B"];
pub const CLASS_SIZES: [usize; 10] = [23, 25, 23, 22, 23, 22, 23, 23, 24, 24];
pub const FIRST_ID: u64 = 1400;
pub const P_WITHIN: f64 = 0.5;
pub const P_ACROSS: f64 = 0.005;
/// Resolution of the contact sensors, in seconds.
pub const TICK: i64 = 20;

/// Class index of every pupil and their shuffled raw ids.
pub fn roster(seed: u64) -> (Vec<usize>, Vec<u64>) {
    let classes: Vec<usize> = CLASS_SIZES
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    let mut ids: Vec<u64> = (FIRST_ID..FIRST_ID + classes.len() as u64).collect();
    ids.shuffle(&mut rng::stream(seed, 0));
    (classes, ids)
}

/// Contact records for both periods, sorted by time.
pub fn school_surrogate(seed: u64) -> Vec<ContactEvent> {
    let (classes, ids) = roster(seed);
    let n = classes.len();
    let mut events = Vec::new();
    for (p, period) in [Period::Morning, Period::Afternoon].into_iter().enumerate() {
        let mut rng = rng::stream(seed, 1 + p as u64);
        let (start, end, width) = period.bounds();
        let mut slot = start;
        while slot < end {
            let ticks = ((end.min(slot + width) - slot) / TICK).max(1);
            for a in 0..n {
                for b in a + 1..n {
                    let prob = if classes[a] == classes[b] {
                        P_WITHIN
                    } else {
                        P_ACROSS
                    };
                    if rng.random::<f64>() >= prob {
                        continue;
                    }
                    for _ in 0..rng.random_range(1..=3) {
                        events.push(ContactEvent {
                            t: slot + TICK * rng.random_range(0..ticks),
                            i: ids[a],
                            j: ids[b],
                            class_i: Some(CLASS_NAMES[classes[a]].to_string()),
                            class_j: Some(CLASS_NAMES[classes[b]].to_string()),
                        });
                    }
                }
            }
            slot += width;
        }
    }
    events.sort_by_key(|e| (e.t, e.i, e.j));
    events
}
