//! Persistence: binary fields and traces, CSV mirrors and SVG plots.

mod binary;
pub mod csv;
pub mod svg;

pub use binary::{
    read_field, read_spectrum, read_trace, write_complex_field, write_real_field, write_spectrum, write_trace,
    AnyField, Metadata, FIELD_MAGIC, FORMAT_VERSION, SPECTRUM_MAGIC, TRACE_MAGIC,
};
