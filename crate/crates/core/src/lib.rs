//! Core of the hardware fuzzing toolkit: a Verilog subset frontend, an
//! instrumented two-state cycle simulator, the byte-to-stimulus codec and
//! AFL-style coverage maps.

pub mod coverage;
pub mod designs;
pub mod rtl;
pub mod sim;
pub mod stimulus;

pub use coverage::EngineKind;
