//! Std side of the melody workbench: WAV, contour and model files,
//! multi-threaded analysis, corpora, the CLI and the HTTP service.

pub mod cli;
pub mod contour;
pub mod corpus;
pub mod model;
pub mod run;
pub mod service;
pub mod spectrogram;
pub mod wav;
