//! Exact finite castles and the single-level coding step.

mod coding;
mod verify;
mod model;
mod realize;

pub use coding::{code_level, code_level_capped, numeric_alphabet, refined_cell_count, RefinedCell, SymbolAssignment, TopSummary, CELL_CAP, RESOLUTION};
pub use model::{build_castle_with_xi, build_synthetic_castle, CastleAudit, CastleModel, Column, Label, Tower};
pub use verify::{joint_word_law, verify_identities, IdentityCheck, IdentityReport, Witness, IDENTITIES};
pub use realize::{ratio, realize_array, realize_array_capped, LevelRecord, LevelSpec, RealizedArray};
