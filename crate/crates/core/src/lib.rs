//! Co-speech gesture chat engine.
//!
//! A user message goes to a language-model backend; the reply is spoken by a
//! speech synthesizer while a concept estimated from the reply selects a
//! Labanotation gesture, which is retimed to the speech and decoded into a
//! joint-angle timeline for the target robot.

pub mod chat;
pub mod concept;
pub mod data;
pub mod laban;
pub mod library;
pub mod transcript;
