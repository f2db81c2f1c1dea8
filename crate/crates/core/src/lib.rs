//! Core of the interactive lecture platform: the lecture bundle model, the
//! preprocessing pipeline that produces bundles from a video and transcript,
//! overlay layout, media providers, and the live session engine.

pub mod content;
pub mod gateway;
pub mod geometry;
pub mod imaging;
pub mod layout;
pub mod media;
pub mod net;
pub mod par;
pub mod pipeline;
pub mod session;
pub mod summary;
pub mod synth;
pub mod transcript;
pub mod video;
