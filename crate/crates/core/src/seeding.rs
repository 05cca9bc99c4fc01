//! Deterministic seed derivation and per-replication random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the bytes of `s`. Stable across platforms and toolchains.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed for replication `rep` of policy `policy` under `base_seed`.
pub fn replication_seed(base_seed: u64, policy: &str, rep: u64) -> u64 {
    let h = splitmix64(base_seed ^ fnv1a(policy));
    splitmix64(h ^ splitmix64(rep.wrapping_mul(GOLDEN)))
}

/// Independent generators for one replication.
///
/// Arrivals, efficacy bits and toxicity bits each own a ChaCha stream keyed
/// by the same seed, so a policy's decisions never shift the environment's
/// draws. The policy gets a fourth stream for its own randomisation.
#[derive(Debug, Clone)]
pub struct Streams {
    pub arrival: ChaCha8Rng,
    pub efficacy: ChaCha8Rng,
    pub toxicity: ChaCha8Rng,
    pub policy: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Streams {
            arrival: stream(1),
            efficacy: stream(2),
            toxicity: stream(3),
            policy: stream(4),
        }
    }
}
