//! Shared benchmark inputs.

use distviac::fixtures;
use distviac::{SolverConfig, TriMesh};

/// Mesh sizes used across the benchmarks.
pub const SIZES: [f64; 3] = [0.1, 0.05, 0.025];

/// Annulus `1 ≤ |x| ≤ 2` with edge length `h`.
pub fn annulus(h: f64) -> TriMesh {
    fixtures::annulus(1.0, 2.0, h).expect("annulus fixture")
}

/// Slit annulus `1 ≤ |x| ≤ 2` with edge length `h`.
pub fn slit_annulus(h: f64) -> TriMesh {
    fixtures::slit_annulus(1.0, 2.0, h).expect("slit annulus fixture")
}

/// Default configuration at `ν = 0.1`.
pub fn config() -> SolverConfig {
    SolverConfig::new(0.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_solve() {
        let s = distviac::eikonal::solve(&slit_annulus(SIZES[0]), &config()).unwrap();
        assert!(s.report.converged);
        assert!(annulus(SIZES[0]).n_vertices() > 0);
    }
}
