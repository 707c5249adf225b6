//! Strictly chained (p,q)-ary partitions: partitions of `U` into distinct
//! parts `p^a q^b` in which every part divides the previous one.

pub mod analytics;
pub mod codec;
pub mod count;
pub mod decompose;
pub mod enumerate;
pub mod error;
pub mod graph23;
pub mod oracle;
pub mod partition;
pub mod selftest;
pub mod shortest;
pub mod system;

pub use codec::{
    is_valid_lattice_word, lattice_decode, lattice_encode, tree_decode, tree_encode, LatticeWord, TreeWord,
};
pub use count::{w_amount, w_general, w_p2, w_star, Count, CountTable, Method};
pub use decompose::{Letter, Scheme};
pub use enumerate::{enumerate_decomposed, enumerate_general, sample_uniform, Enumerator, OmegaSet, Sampler};
pub use error::{Error, Result};
pub use oracle::brute_force_enumerate;
pub use partition::{validate, Exp, Partition, PartitionRecord, RawMultiset};
pub use shortest::{chain_pow, sigma, sigma_stats, ChainCost, SigmaResult, SigmaTable};
pub use system::{make_system, PQSystem};
