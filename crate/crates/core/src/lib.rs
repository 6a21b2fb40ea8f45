//! Reasoning-path grounding and editing over structured environments.
//!
//! A language model proposes a reasoning path (one chain of natural-language
//! relations per topic entity). The path is grounded on a knowledge graph by
//! BM25 relation binding and a breadth-first walk, or on a table by column
//! and row filtering. When grounding gets stuck, the error, the halfway-done
//! instances and nearby relations go back to the model for an edit, up to a
//! fixed budget. Grounded evidence is merged and handed to a reasoner.

pub mod error;
pub mod eval;
pub mod gateway;
pub mod instantiate;
pub mod kg;
pub mod path;
pub mod reasoner;
pub mod relation_index;
pub mod session;
pub mod table;
pub mod table_session;
pub mod trace;

pub use error::{
    DatasetError, GatewayError, IndexError, KgError, PathParseError, RenderError, ReportError,
    TableLoadError, UsageError,
};
pub use eval::{build_report, denotation_accuracy, hit_at_1, MetricsReport};
pub use gateway::{Backend, Gateway, HttpBackend, HttpConfig, Role, RoleName, RoleProfile, Transcript};
pub use instantiate::{
    has_error, instantiate_constraint, instantiate_path, ConstraintOutcome, ErrorReason,
    InstantiationError, InstantiatorConfig,
};
pub use kg::{KnowledgeGraph, Triple};
pub use path::{parse_reasoning_path, Constraint, ReasoningPath};
pub use relation_index::{BoundRelation, RelationIndex};
pub use session::{
    assemble_feedback, merge_results, run_session, ErrorFeedback, MergedEvidence, SessionConfig,
    SessionTrace,
};
pub use table::{instantiate_table, parse_table_path, Table, TableError, TablePath};
pub use table_session::{run_table_session, TableSessionConfig, TableSessionTrace};
pub use trace::{GoldRecord, TraceRecord};
