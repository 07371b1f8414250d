//! Library side of the command-line harness: pipeline assembly, the
//! scenario runner, and report rendering. The binary in `main.rs` is a thin
//! dispatcher over these.

pub mod pipeline;
pub mod report;
pub mod runner;
pub mod svg;

/// Honor the `DDF_THREADS` cap (0 or unset means automatic).
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("DDF_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
