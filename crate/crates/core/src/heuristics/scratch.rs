/// Per-slot flags invalidated in O(1) by bumping a generation counter.
///
/// A slot is set iff its stamp equals the current generation.
#[derive(Debug, Clone)]
pub struct GenerationScratch {
    generation: u32,
    stamps: Vec<u32>,
}

impl GenerationScratch {
    pub fn new(slots: usize) -> Self {
        Self {
            generation: 1,
            stamps: vec![0; slots],
        }
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    /// Clears every slot.
    pub fn next_generation(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            // wrapped: stale stamps could alias, so wipe them once
            self.stamps.fill(0);
            self.generation = 1;
        }
    }

    #[inline]
    pub fn is_set(&self, slot: usize) -> bool {
        self.stamps[slot] == self.generation
    }

    /// Sets `slot`; returns whether it was already set.
    #[inline]
    pub fn set(&mut self, slot: usize) -> bool {
        let was = self.is_set(slot);
        self.stamps[slot] = self.generation;
        was
    }
}

/// Values that read as `default` unless written during the current
/// generation.
#[derive(Debug, Clone)]
pub struct StampedSlots<T: Copy> {
    marks: GenerationScratch,
    values: Vec<T>,
    default: T,
}

impl<T: Copy> StampedSlots<T> {
    pub fn new(slots: usize, default: T) -> Self {
        Self {
            marks: GenerationScratch::new(slots),
            values: vec![default; slots],
            default,
        }
    }

    pub fn reset(&mut self) {
        self.marks.next_generation();
    }

    #[inline]
    pub fn get(&self, slot: usize) -> T {
        if self.marks.is_set(slot) {
            self.values[slot]
        } else {
            self.default
        }
    }

    #[inline]
    pub fn set(&mut self, slot: usize, value: T) {
        self.marks.set(slot);
        self.values[slot] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_bump_clears_slots() {
        let mut s = GenerationScratch::new(4);
        assert!(!s.set(2));
        assert!(s.set(2));
        assert!(s.is_set(2));
        s.next_generation();
        assert!(!s.is_set(2));
    }

    #[test]
    fn wraparound_does_not_resurrect_old_marks() {
        let mut s = GenerationScratch::new(2);
        s.set(0);
        s.generation = u32::MAX;
        s.set(1);
        s.next_generation();
        assert!(!s.is_set(0));
        assert!(!s.is_set(1));
    }

    #[test]
    fn stamped_values_default_after_reset() {
        let mut v = StampedSlots::new(3, 7u64);
        v.set(1, 2);
        assert_eq!(v.get(1), 2);
        assert_eq!(v.get(0), 7);
        v.reset();
        assert_eq!(v.get(1), 7);
    }
}
