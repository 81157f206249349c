//! Fixtures shared by the benchmarks.

use etp_core::{RadialProfile, Rect};

/// Index 4 on the shell 1 ≤ r ≤ 2, constant 1 elsewhere up to R0 = 3.
pub fn sharp_shell() -> RadialProfile {
    RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.0).expect("valid shell")
}

/// Same shell with smooth edges of width 0.1.
pub fn blended_shell() -> RadialProfile {
    RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.1).expect("valid shell")
}

pub fn small_rect() -> Rect {
    Rect::new(0.5, 8.0, -1.5, 1.5).expect("valid rect")
}
