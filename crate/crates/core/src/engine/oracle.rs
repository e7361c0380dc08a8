//! Deterministic symbolic labeling: the ground-truth rule the generated
//! rule base encodes, usable without any inference machinery.

/// Returns the complex-event class at `t`, if any: the class of the event at
/// `t` when the same class also occurs at some `p` with
/// `t - window < p < t`. The first timestamp can never carry a complex
/// event because it has no predecessor.
pub fn label_oracle(classes: &[u8], window: u32, t: usize) -> Option<u8> {
    assert!(t < classes.len(), "timestamp {t} outside the stream");
    let current = classes[t];
    let earliest = (t as i64 - window as i64 + 1).max(0) as usize;
    (earliest..t).any(|p| classes[p] == current).then_some(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeat_within_window_fires() {
        // Same class at timestamps 3 and 5, window 5.
        let mut classes = vec![0, 1, 2, 3, 4, 5, 6, 7];
        classes[3] = 8;
        classes[5] = 8;
        assert_eq!(label_oracle(&classes, 5, 5), Some(8));
    }

    #[test]
    fn repeat_outside_window_does_not_fire() {
        // Same class at timestamps 2 and 7: distance exceeds window 5.
        let classes = vec![0, 1, 5, 3, 4, 9, 6, 5];
        assert_eq!(label_oracle(&classes, 5, 7), None);
    }

    #[test]
    fn first_timestamp_is_always_null() {
        assert_eq!(label_oracle(&[3, 3, 3], 4, 0), None);
    }

    #[test]
    fn window_boundary_is_strict() {
        // window 2 means only the immediate predecessor counts.
        let classes = vec![7, 0, 7];
        assert_eq!(label_oracle(&classes, 2, 2), None);
        assert_eq!(label_oracle(&classes, 3, 2), Some(7));
    }
}
