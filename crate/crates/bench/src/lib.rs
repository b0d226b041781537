//! Shared inputs for the kernel benchmarks.

use loolsim::optics::haar_unitary;
use loolsim::{
    linspace, DensityMatrix, JointSpectralAmplitude, ModeIndex, ModeUnitary, Path, SubspaceLabel,
    C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 0xbe_4c;

pub fn label() -> SubspaceLabel {
    SubspaceLabel::azimuthal(3)
}

/// Crosstalk-degraded target state, the usual tomography workload.
pub fn noisy_state() -> DensityMatrix {
    DensityMatrix::crosstalk(label(), 0.9).expect("eta in range")
}

/// Haar-random unitary over `n` azimuthal modes alternating between paths.
pub fn random_unitary(n: usize) -> ModeUnitary {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let modes = (0..n)
        .map(|k| {
            let path = if k % 2 == 0 { Path::A } else { Path::B };
            ModeIndex::azimuthal(path, (k / 2) as i32)
        })
        .collect();
    ModeUnitary::new(haar_unitary(n, &mut rng), modes).expect("haar matrices are unitary")
}

/// Gaussian pump times Gaussian phase matching on an `n × n` grid.
pub fn gaussian_jsa(n: usize) -> JointSpectralAmplitude {
    let omega = linspace(-12.0, 12.0, n);
    JointSpectralAmplitude::from_fn(omega, |w1, w2| {
        C64::new(
            (-(w1 + w2).powi(2) / 2.0 - (w1 - w2).powi(2) / 18.0).exp(),
            0.0,
        )
    })
    .and_then(|j| j.normalized())
    .expect("finite, non-zero grid")
}
