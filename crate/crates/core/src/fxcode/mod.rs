//! Fixed-point programs: formats, exact range analysis, program synthesis,
//! bit-exact evaluation and C emission.

mod emit;
mod format;
mod program;
mod synth;

pub use emit::emit_c_source;
pub use format::{allocate_format, shr_toward_zero, FxFormat, Interval};
pub use program::{
    FxNode, FxOp, FxOutput, FxProgram, NodeId, OutputRole, ProgramBuilder, StateSlot,
};
pub use synth::{
    synthesize_controller_program, synthesize_gain_program, synthesize_pid_program, SynthOptions,
};
