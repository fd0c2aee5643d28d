//! Seed-splitting discipline. Every random quantity in the crate flows from
//! one 64-bit master seed: the master and a command tag are hashed into a
//! 256-bit ChaCha key, and replicate k then runs on stream k of that keyed
//! generator. A replicate's draws therefore depend only on
//! (master seed, tag, replicate index), never on which worker executed it or
//! in what order, which is what makes runs byte-identical across thread
//! counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type RngStream = ChaCha8Rng;

fn derive_key(master: u64, tag: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update([0u8]); // domain separator so tags cannot collide with seed bytes
    h.update(tag.as_bytes());
    h.finalize().into()
}

/// Generator for command-level draws (anything not tied to a replicate).
pub fn command_stream(master: u64, tag: &str) -> RngStream {
    ChaCha8Rng::from_seed(derive_key(master, tag))
}

/// Generator owned by replicate `rep` of the command identified by `tag`.
pub fn replicate_stream(master: u64, tag: &str, rep: u64) -> RngStream {
    replicate_of(&command_stream(master, tag), rep)
}

/// Replicate stream derived from an existing command stream. Depends only on
/// the base key and the replicate index, not on how far `base` has been
/// consumed.
pub fn replicate_of(base: &RngStream, rep: u64) -> RngStream {
    let mut rng = ChaCha8Rng::from_seed(base.get_seed());
    // stream 0 is reserved for command-level draws; replicates start at 1
    rng.set_stream(rep.wrapping_add(1));
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_pure_functions_of_their_inputs() {
        let mut a = replicate_stream(42, "dual", 7);
        let mut b = replicate_stream(42, "dual", 7);
        for _ in 0..32 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn tags_reps_and_seeds_all_separate_streams() {
        let first = |mut r: RngStream| r.random::<u64>();
        let base = first(replicate_stream(42, "dual", 0));
        assert_ne!(base, first(replicate_stream(42, "dual", 1)));
        assert_ne!(base, first(replicate_stream(42, "forward", 0)));
        assert_ne!(base, first(replicate_stream(43, "dual", 0)));
        assert_ne!(base, first(command_stream(42, "dual")));

        let mut seen = std::collections::HashSet::new();
        for rep in 0..100 {
            assert!(seen.insert(first(replicate_stream(42, "dual", rep))));
        }
    }

    #[test]
    fn replicate_of_ignores_consumed_state() {
        let mut base = command_stream(9, "forward");
        let _ = base.random::<u64>();
        let mut via_base = replicate_of(&base, 3);
        let mut direct = replicate_stream(9, "forward", 3);
        for _ in 0..8 {
            assert_eq!(via_base.random::<u64>(), direct.random::<u64>());
        }
    }

    #[test]
    fn discipline_is_frozen() {
        // guards the key derivation and stream layout against silent change;
        // stored outputs stay replayable only while these hold
        let mut c = command_stream(42, "dual");
        let mut r0 = replicate_stream(42, "dual", 0);
        let a = c.random::<u64>();
        let b = r0.random::<u64>();
        assert_ne!(a, b);
        let mut c2 = command_stream(42, "dual");
        assert_eq!(c2.random::<u64>(), a);
    }
}
