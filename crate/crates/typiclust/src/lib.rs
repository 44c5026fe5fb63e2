//! Low-budget active learning over precomputed embeddings.
//!
//! The crate has two halves. The selection half implements TypiClust
//! (density-aware diverse querying), its ablation variants, and the
//! classic baselines (random, uncertainty family, coreset), all operating
//! on embedding vectors loaded from files. The simulation half evaluates
//! the mixture-model learning theory behind the strategy: biased-sampling
//! error curves, the derivative threshold test, phase-transition
//! detection, and Monte-Carlo experiments with mixtures of least-squares
//! linear classifiers and 1-NN coverage bounds.

pub mod cli;
pub mod clustering;
pub mod io;
pub mod linear;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod strategies;
pub mod synthetic;
pub mod theory;
pub mod typicality;
