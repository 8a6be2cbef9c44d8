//! Covering families of vectors over `Z_s` and the product dimension of
//! clique factors.
//!
//! A family of words in `Z_s^q` is *covering* when the difference of any two
//! distinct members contains every residue. A covering family of size `r`
//! yields `q` proper colorings of `r` disjoint copies of `K_s` in which every
//! non-adjacent pair shares a color, so such families bound the product
//! dimension from above. The crate builds these families (explicitly, by
//! exact search, and by iterated chain amplification), verifies them, and
//! tracks the resulting bounds.

pub mod amplify;
pub mod bounds;
pub mod constructions;
pub mod error;
pub mod product;
pub mod search;
pub mod stars;
pub mod store;
pub mod zmod;

pub use error::{Error, Result};
pub use zmod::{
    diff, family_is_covering, reduce_mod, word_covers, Alphabet, CoverMask, CoverTarget, Family,
    Symbol, VerifyReport, Word,
};
