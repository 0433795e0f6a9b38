//! WPA3 Dragonfly (SAE and SAE-PT) with leaky and hardened primitives, a
//! leakage simulator, and an offline dictionary-partitioning engine.

pub mod attack;
pub mod dragonfly;
pub mod encoding;
pub mod field_curve;
mod hexser;
pub mod leakage;
pub mod traces;
