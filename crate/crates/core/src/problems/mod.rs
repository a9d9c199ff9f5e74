//! Test operators: the two-dimensional toy example, seeded synthetic operators with a
//! known fixed point, and the three experiment operators (Markov chain, ROF denoising,
//! Mirror-Prox for matrix games).

pub mod game;
pub mod markov;
pub mod pgm;
pub mod rof;
pub mod synthetic;
pub mod toy;

pub use game::{build_mirror_prox, duality_gap, sample_game, GameSpec, MirrorProx, Orientation};
pub use markov::{build_markov, MarkovChain, MarkovOperator};
pub use pgm::Image;
pub use rof::{build_rof, div2d, grad2d, RofOperator, RofSpec};
