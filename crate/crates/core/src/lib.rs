//! Exact simulation of squared Bessel, CIR, CEV, Bessel-K and Confluent-U
//! diffusions, with Monte Carlo and randomized quasi-Monte Carlo pricing of
//! discretely monitored Asian and lookback options.

pub mod discrete;
pub mod error;
pub mod experiments;
pub mod hypergeo;
pub mod inversion;
pub mod mc;
pub mod qmc;
pub mod quad;
pub mod randgamma;
pub mod specfun;
pub mod sqb;
pub mod stats;
pub mod transforms;
pub mod variates;

pub use discrete::{DiscreteKind, DiscreteLogConcave};
pub use error::{Error, Result};
pub use hypergeo::{BesselK, ConfluentU, ExactSampler, HypergeometricModel, WeightedSampler};
pub use inversion::InverseCdfTable;
pub use mc::{
    price_mc, price_rqmc, price_weighted, AssetPathSampler, AveragingWindow, CevAsset, CirAsset, EstimatorResult, OptionSpec,
    PathOutcome, Payoff, SqbAsset,
};
pub use randgamma::RandGammaSpec;
pub use sqb::{Boundary, PathSkeleton, Scheme, SqbParams, TimeGrid};
pub use transforms::{CevApproach, CevParams, CevSampler, CirParams, CirSampler};
pub use variates::{DiscreteMethod, PseudoRandom, QmcPoint, VariateSource};
