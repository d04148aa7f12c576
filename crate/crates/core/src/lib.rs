pub mod bench;
pub mod bm25;
pub mod corpus;
pub mod error;
pub mod external;
pub mod fmindex;
pub mod genret;
pub mod traindata;

pub use corpus::{Corpus, Document, Symbol};
pub use error::{Error, Result};
pub use fmindex::FmIndex;
