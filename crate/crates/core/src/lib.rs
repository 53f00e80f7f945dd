//! Desk-scale brain-robot-interface stack.
//!
//! The crate wires a three-stage EEG intention decoder (object selection via
//! SSVEP/CCA, skill selection via FBCSP+SVM motor imagery, parameter selection
//! via closed-loop cursor control), an EMG confirmation gate with artifact
//! rejection, a synthetic neurophysiology forward model that stands in for
//! human subjects, a simulated tabletop world with parameterized primitive
//! skills and first-order-logic goal checking, a few-shot intent-learning
//! layer (next object/skill retrieval and one-shot parameter transfer), and
//! the closed-loop protocol engine that drives trials and benchmarks.

pub mod signal;

pub mod ssvep;

pub mod mi;

pub mod emg;

pub mod cursor;

pub mod synth;

pub mod world;

pub mod intent;

pub mod protocol;
