//! Shared fixtures for the solver tests.

use super::DpcStack;
use crate::forward::{low_pass, simulate_dpc};
use crate::optics::{
    compute_ptf, make_frequency_grid, make_pupil, make_source_pair, Direction, FrequencyGrid,
    OpticalConfig, SourceGeometry, TransferFunction,
};
use crate::phantom::{generate_phantom, PhantomKind, PhantomSpec, PhaseImage};

pub fn paper_optics(n: usize) -> OpticalConfig {
    OpticalConfig::new(0.530, 0.3, 10.0, 3.46, n, n).unwrap()
}

/// Half-disc transfer functions for the usual two orthogonal axes.
pub fn two_axis_tfs(n: usize) -> (FrequencyGrid, Vec<TransferFunction>) {
    let cfg = paper_optics(n);
    let grid = make_frequency_grid(&cfg).unwrap();
    let pupil = make_pupil(&grid, &cfg).unwrap();
    let tfs = [Direction::Top, Direction::Left]
        .into_iter()
        .map(|dir| {
            let (pos, neg) = make_source_pair(&grid, &cfg, dir, SourceGeometry::HalfDisc).unwrap();
            compute_ptf(&grid, &pupil, &pos, &neg).unwrap()
        })
        .collect();
    (grid, tfs)
}

/// Noise-free measurement stack of a phase map through the two-axis model.
pub fn stack_from_phase(phase: &PhaseImage, tfs: &[TransferFunction]) -> DpcStack {
    let images = tfs.iter().map(|tf| simulate_dpc(phase, tf).unwrap()).collect();
    DpcStack::new(images, tfs.to_vec()).unwrap()
}

/// Binary-blob phantom confined to 80% of the transfer band. Edge-structured
/// targets keep the DPC responses sparse, which the sparsity prior assumes.
pub fn band_limited_phantom(n: usize, seed: u64) -> PhaseImage {
    let cfg = paper_optics(n);
    let grid = make_frequency_grid(&cfg).unwrap();
    let blobs = generate_phantom(&PhantomSpec::new(PhantomKind::BinaryBlobs, n, (0.0, 1.0), seed))
        .unwrap();
    low_pass(&blobs, &grid, 0.8 * 2.0 * cfg.cutoff_cyc_per_um()).unwrap()
}
