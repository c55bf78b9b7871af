//! Identifiers, the systems that issue them, and what can be inferred by
//! watching them go by.
//!
//! - [`model`]: schemes, identifiers, entities, observations, accounts
//! - [`associations`]: identifier–entity relations and their cardinality
//! - [`ims`]: identity management systems and biometric matching
//! - [`provenance`]: identity trees and their validity and reliability
//! - [`surveillance`]: behaviour assembly, attribute recognition, social sorting
//! - [`transform`]: translation between schemes and reduction of one system to another
//! - [`scenario`]: the scenario language and file formats

pub mod associations;
pub mod ims;
pub mod model;
pub mod provenance;
pub mod ratio;
pub mod scenario;
pub mod surveillance;
pub mod transform;

pub use associations::{classify_cardinality, enumerate, Association, AssociationError, CardinalityClass};
pub use ims::{biometric_match, BiometricMatch, BiometricProfile, IdentityManagementSystem, ImsError};
pub use model::{
    format_for_display, schemes, validate_format, Entity, EntityId, EntityKind, FormatCheck, Identifier, ModelError,
    ObservationEvent, Scheme,
};
pub use provenance::{IdentityGraph, IdentityNode, ProvenanceError, Source};
pub use ratio::Proportion;
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError, ScenarioModel, Snapshot};
pub use surveillance::{
    social_sort, surveil, surveil_and_sort, AttributeDef, Category, SortingReport, SurveillanceContext,
    SurveillanceReport,
};
pub use transform::{compose, reduce_ims, translate, TransformChain, TransformError, TransformTable};
