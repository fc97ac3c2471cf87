//! Couplings of random combinatorial structures with their independent
//! limits: permutations via Feller's bits, integers via size-biased prime
//! multisets, and integers via Poisson-Dirichlet spacings.

pub mod feller;
pub mod growth;
pub mod pd;
pub mod tail;

pub use feller::{feller_sample, FellerSample, JansonPrefix, MIN_HORIZON_FACTOR};
pub use growth::{
    choose_p0, grow_integer, indel_count, partial_product_j, GrowthContext, GrowthMode, GrownInteger,
    TranscriptRecord, TRANSCRIPT_HEADER,
};
pub use pd::{default_cutoff, pd_couple, PDCoupledSample};
pub use tail::{integer_tail_intensity, MultisetVariant, PrimeTailIntensity, TailLabelLaw, INVERSION_TOL};
