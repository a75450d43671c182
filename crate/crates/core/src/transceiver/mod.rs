//! Differential encoding, fading channel and noncoherent detection.

pub mod channel;
pub mod detector;
pub mod link;
pub mod state;

pub use channel::{apply_channel, noise_variance, Channel, ChannelMode};
pub use detector::Detector;
pub use link::{
    frames_for_bits, run_link, run_link_with, simulate_frame, BerResult, BerRow, FrameOutcome,
    support_rows, LinkConfig, LinkSetup, Preamble, Scheme,
};
pub use state::{
    basis_form_update, clamp_forgetting_factor, forgetting_factor, raw_forgetting_factor,
    single_matrix_update, Encoder, Receiver,
};
