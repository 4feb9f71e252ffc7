//! Lattice-gas automata (HPP and FHP), hydrodynamic observables, elementary
//! cellular automata and their rule-space principal components, and WSCCS
//! colony chains.
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the Markov chain
//! code is generic over [`Weight`], which also covers exact rationals. The
//! aliases below fix the usual choices.

pub mod dynamics;
pub mod eca;
pub mod lattice;
pub mod linalg;
pub mod observables;
pub mod pca;
pub mod rng;
pub mod scalar;
pub mod wsccs;

pub use dynamics::{CollisionModel, CollisionTable, DynamicsError, RandomPolicy};
pub use eca::{EcaBoundary, EcaError, EcaRule, PatternTable, SpacetimeDiagram};
pub use lattice::{Boundary, Direction, ExactVector, LatticeError, LatticeKind, LatticeState, Site, Topology, UnitsConfig};
pub use linalg::{LinalgError, Matrix, Spectrum};
pub use observables::{
    FhpConstants, MacroField, ObservablesError, OccupationField, ShearWaveConfig, ShearWaveMeasurement, Viscosity,
};
pub use pca::{ConstantColumns, DataMatrix, KlTransform, NormMatrix, PcaError, RuleSpaceAnalysis};
pub use scalar::{Real, Weight};
pub use wsccs::{AgentDef, AgentSystem, ProcessState, TransitionMatrix, WsccsError};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Spectrum64 = Spectrum<f64>;
pub type Spectrum32 = Spectrum<f32>;
pub type DataMatrix64 = DataMatrix<f64>;
pub type OccupationField64 = OccupationField<f64>;
pub type MacroField64 = MacroField<f64>;
pub type FhpConstants64 = FhpConstants<f64>;
pub type Units64 = UnitsConfig<f64>;
pub type RuleSpaceAnalysis64 = RuleSpaceAnalysis<f64>;
pub type RuleSpaceAnalysis32 = RuleSpaceAnalysis<f32>;
pub type TransitionMatrix64 = TransitionMatrix<f64>;
/// Colony chain over exact rationals.
pub type ExactTransitionMatrix = TransitionMatrix<num_rational::BigRational>;
