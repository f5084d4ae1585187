use std::collections::VecDeque;

use crate::metric::ClassMap;

/// The last `capacity` per-frame class maps, oldest first.
#[derive(Clone, Debug)]
pub struct RollingWindow {
    capacity: usize,
    maps: VecDeque<ClassMap>,
    timestamps: VecDeque<f64>,
}

impl RollingWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self {
            capacity,
            maps: VecDeque::with_capacity(capacity),
            timestamps: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.maps.len() == self.capacity
    }

    /// Appends a frame, evicting the oldest once full.
    pub fn push(&mut self, map: ClassMap, timestamp: f64) {
        if self.is_full() {
            self.maps.pop_front();
            self.timestamps.pop_front();
        }
        self.maps.push_back(map);
        self.timestamps.push_back(timestamp);
    }

    pub fn latest(&self) -> Option<&ClassMap> {
        self.maps.back()
    }

    pub fn maps(&self) -> impl Iterator<Item = &ClassMap> {
        self.maps.iter()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.timestamps.iter().copied()
    }

    /// Window contents as one slice, oldest first.
    pub fn contiguous(&mut self) -> &[ClassMap] {
        self.maps.make_contiguous()
    }

    /// Time covered by the window, first to last frame.
    pub fn span(&self) -> f64 {
        match (self.timestamps.front(), self.timestamps.back()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}
