//! Module-augmented LLM prompting for complex ontology alignment.
//!
//! The pipeline parses a source and a target ontology, walks a staged
//! chat conversation (upload the target, ask about source entities, confirm
//! manual examination, ask for related modules, re-ask with module
//! descriptions), reads target entities back out of the responses, scores
//! them against a reference alignment and assembles detected predicates into
//! candidate rules.
//!
//! Scores are generic over the scalar type ([`scalar::Fraction`]); the
//! aliases below fix the common choices.

pub mod assemble;
pub mod extract;
pub mod orchestrator;
pub mod rdf;
pub mod registry;
pub mod rules;
pub mod scalar;
pub mod scoring;

/// Exact rational used for lossless score arithmetic.
pub type Rational = num_rational::Ratio<i64>;
pub type RuleScore = scoring::RuleScoreOf<f64>;
pub type ExactRuleScore = scoring::RuleScoreOf<Rational>;
pub type AggregateReport = scoring::AggregateReportOf<f64>;
pub type ExactAggregateReport = scoring::AggregateReportOf<Rational>;
