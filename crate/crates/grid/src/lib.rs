//! Network side: Thevenin source with harmonic EMF, three-phase π-section
//! cables and the radial topology container.

pub mod error;
pub mod line;
pub mod thevenin;
pub mod topology;

pub use error::{GridError, Result};
pub use line::{phase_to_sequence, sequence_to_phase, LineSegment, SequenceParameters};
pub use thevenin::{table_v_harmonics, thevenin_from_sc, HarmonicInjection, TheveninEquivalent};
pub use topology::{
    attachment_ports, grid_hss, Attachment, AttachmentKind, Branch, GridModel, NetworkTopology,
};
