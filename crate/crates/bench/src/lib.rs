pub use survival_core;
