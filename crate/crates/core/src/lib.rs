//! Federated search over topic-specific collections.
//!
//! Documents are tokenized and Porter-stemmed into per-collection inverted
//! indexes ([`index`]). A service [`directory`] keeps the document-frequency
//! matrix over all collections and ranks them for a query with CORI
//! inference-network beliefs followed by a constraint-aware utility. The
//! [`broker`] ties it together: stem the query, pick collections, search
//! them and merge the hits. [`eval`] builds seeded experiment corpora and
//! compares selective routing against exhaustive search.

pub mod broker;
pub mod corpus;
pub mod directory;
pub mod error;
pub mod eval;
pub mod index;
pub mod session;
pub mod stemmer;

pub use broker::{merge_results, Engine, QueryRequest, QueryResponse, SourcedHit};
pub use directory::{CoriParams, Directory, UtilityConstraints};
pub use error::{Error, Result};
pub use index::{CollectionId, CollectionSet, SearchHit};
pub use session::{sources_path, CollectionSource, Session};
