pub mod commands;
pub mod format;
pub mod kv;
pub mod report;
pub mod scenario;
pub mod svg;
