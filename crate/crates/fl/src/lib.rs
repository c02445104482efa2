//! Federated-learning lab: desk-scale training, Byzantine update generators,
//! shadow-update generation, SPCA + SVM meta-classifiers with the FHE-cost
//! grid search, and compilation of trained filters into homomorphic form.

pub mod byzantine;
pub mod filter;
pub mod grid;
pub mod learner;
pub mod persist;
pub mod shadow;
pub mod spca;
pub mod svm;
