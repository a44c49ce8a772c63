//! Hierarchical, order-independent seeding.
//!
//! A [`SeedStream`] is a root seed plus a label path such as
//! `["alice", "17", "policy"]`. The derived RNG depends only on that pair, so
//! the order in which actors or probes are scheduled never changes a draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    root: u64,
    path: Vec<String>,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

impl SeedStream {
    pub fn new(root: u64) -> Self {
        Self {
            root,
            path: Vec::new(),
        }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn path(&self) -> &[String] {
        &self.path
    }

    /// Child stream one label deeper.
    pub fn child(&self, label: impl ToString) -> Self {
        let mut path = self.path.clone();
        path.push(label.to_string());
        Self {
            root: self.root,
            path,
        }
    }

    /// 64-bit digest of `(root, path)`.
    ///
    /// Labels are length-prefixed so `["ab","c"]` and `["a","bc"]` differ.
    pub fn derive(&self) -> u64 {
        let mut h = splitmix64(self.root);
        for label in &self.path {
            h = splitmix64(h ^ (label.len() as u64));
            h = splitmix64(h ^ fnv1a(label.as_bytes()));
        }
        h
    }

    pub fn rng(&self) -> SimRng {
        ChaCha8Rng::seed_from_u64(self.derive())
    }
}
