//! Stable seed derivation.
//!
//! Attempt seeds must be a pure function of (run seed, task id, attempt
//! index) so that resumed runs and reordered executions reproduce the same
//! transcripts. `std::hash` is allowed to change between releases, so string
//! hashing is pinned to FNV-1a here.

/// FNV-1a over the raw bytes. Stable across platforms and releases.
pub fn stable_hash64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// splitmix64 finalizer; full-avalanche mix of a 64-bit word.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-attempt seed: mix of (run_seed, stable hash of task_id, attempt_index).
pub fn derive_attempt_seed(run_seed: u64, task_id: &str, attempt_index: u32) -> u64 {
    mix64(run_seed ^ mix64(stable_hash64(task_id)) ^ mix64(u64::from(attempt_index)).rotate_left(17))
}

/// Seed for auxiliary-collection calls (ideas, rephrasings): keyed by purpose
/// so they never collide with attempt seeds.
pub fn derive_call_seed(run_seed: u64, task_id: &str, purpose: &str, call_index: u64) -> u64 {
    mix64(run_seed ^ stable_hash64(task_id) ^ stable_hash64(purpose).rotate_left(23) ^ mix64(call_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn fnv_known_values() {
        // Reference FNV-1a vectors.
        assert_eq!(stable_hash64(""), 0xcbf29ce484222325);
        assert_eq!(stable_hash64("a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn attempt_seeds_distinct_across_tasks_and_indices() {
        let mut seen = HashSet::new();
        for task in ["t1", "t2", "a-long-task-identifier"] {
            for idx in 0..100 {
                assert!(seen.insert(derive_attempt_seed(42, task, idx)));
            }
        }
    }

    #[test]
    fn attempt_seed_is_pure() {
        assert_eq!(
            derive_attempt_seed(7, "task", 3),
            derive_attempt_seed(7, "task", 3)
        );
        assert_ne!(
            derive_attempt_seed(7, "task", 3),
            derive_attempt_seed(8, "task", 3)
        );
    }
}
