use super::pose::Pose;

/// One retained frame used by mapping.
#[derive(Debug, Clone)]
pub struct Keyframe {
    /// Index of the frame in the input sequence.
    pub frame_index: usize,
    pub pose: Pose,
}

/// Keyframes in insertion order; ids strictly increase and the first frame of
/// a run is always inserted.
#[derive(Debug, Clone, Default)]
pub struct KeyframeStore {
    entries: Vec<Keyframe>,
}

impl KeyframeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, frame_index: usize, pose: Pose) {
        if let Some(last) = self.entries.last() {
            assert!(
                frame_index > last.frame_index,
                "keyframe ids must strictly increase"
            );
        }
        self.entries.push(Keyframe { frame_index, pose });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Keyframe {
        &self.entries[idx]
    }

    pub fn pose_mut(&mut self, idx: usize) -> &mut Pose {
        &mut self.entries[idx].pose
    }

    pub fn iter(&self) -> impl Iterator<Item = &Keyframe> {
        self.entries.iter()
    }

    pub fn last(&self) -> Option<&Keyframe> {
        self.entries.last()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insertion_order_enforced() {
        let mut store = KeyframeStore::new();
        store.insert(0, Pose::identity());
        store.insert(4, Pose::identity());
        assert_eq!(store.len(), 2);
        assert_eq!(store.get(1).frame_index, 4);
    }

    #[test]
    #[should_panic]
    fn decreasing_ids_panic() {
        let mut store = KeyframeStore::new();
        store.insert(4, Pose::identity());
        store.insert(1, Pose::identity());
    }
}
