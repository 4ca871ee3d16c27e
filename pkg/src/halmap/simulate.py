"""Stylized single-coil MR acquisition.

Fully sampled k-space is emulated by the unitary 2D FFT of the object.
Model error is injected as pixelwise uniform phase noise applied to the
full k-space grid before masking; measurement noise is iid Gaussian added
to the real and imaginary channels of the sampled entries:

    g = Mask(exp(i*phi) .* FFT(theta)) + n

Noise streams come from numpy's PCG64 generator seeded through
SeedSequence, which is documented and portable.  Batch drivers derive one
substream per image from (seed, image_id) via derive_seed, so dataset
simulation is reproducible regardless of scheduling.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionsError, ParameterError
from .linop import FftMaskOperator, ImageGrid, MaskSpec, apply_forward


@dataclass(frozen=True)
class NoiseConfig:
    """Noise model parameters.

    gaussian_sigma is the standard deviation of the iid Gaussian added to
    each of the real and imaginary k-space channels.  Phase noise is
    uniform in [-phase_noise_amplitude, +phase_noise_amplitude] radians,
    zero mean.  The same seed always reproduces bit-identical noise.  When
    phase_seed is set, the phase field is drawn from its own stream so the
    same model error can be held fixed across Gaussian noise realizations.
    """

    gaussian_sigma: float = 0.0
    phase_noise_amplitude: float = 0.0
    seed: int = 0
    phase_seed: int | None = None

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ParameterError("gaussian_sigma must be nonnegative")
        if not 0 <= self.phase_noise_amplitude <= np.pi:
            raise ParameterError("phase_noise_amplitude must lie in [0, pi]")


def derive_seed(seed: int, image_id: str) -> int:
    """Deterministic per-image substream key for a batch seed.

    Mixes the image id into the seed through SHA-256 so distinct ids give
    statistically independent streams.
    """
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]
    mixer = np.random.SeedSequence([int(seed) & (2**64 - 1), *words])
    return int(mixer.generate_state(1, np.uint64)[0])


def make_uniform_mask(height: int, width: int, factor: int, offset: int = 0) -> MaskSpec:
    """Uniform Cartesian row mask sampling every ``factor``-th row from ``offset``."""
    if factor < 1:
        raise ParameterError("undersampling factor must be >= 1")
    if factor > height:
        raise ParameterError(f"factor {factor} exceeds k-space height {height}")
    if not 0 <= offset < factor:
        raise ParameterError(f"offset must lie in [0, {factor})")
    rows = tuple(range(offset, height, factor))
    return MaskSpec(height, width, rows, factor=factor, offset=offset)


def simulate_measurement(
    theta: ImageGrid, mask: MaskSpec, noise: NoiseConfig
) -> np.ndarray:
    """Simulate undersampled k-space data for one object.

    With a zero noise config the output equals apply_forward exactly.  The
    phase field covers the full k-space grid and is drawn before the
    Gaussian channel noise, so the two perturbations are reproducible
    independently of each other.
    """
    if (theta.height, theta.width) != (mask.height, mask.width):
        raise DimensionsError(
            f"image shape {theta.shape} does not match mask dimensions "
            f"({mask.height}, {mask.width})"
        )
    op = FftMaskOperator(mask)
    if noise.phase_noise_amplitude == 0 and noise.gaussian_sigma == 0:
        return apply_forward(op, theta)

    rng = np.random.default_rng(np.random.SeedSequence(int(noise.seed) & (2**64 - 1)))
    kspace = np.fft.fft2(theta.data, norm="ortho")
    if noise.phase_noise_amplitude > 0:
        phase_rng = rng
        if noise.phase_seed is not None:
            phase_rng = np.random.default_rng(
                np.random.SeedSequence(int(noise.phase_seed) & (2**64 - 1))
            )
        phi = phase_rng.uniform(
            -noise.phase_noise_amplitude,
            noise.phase_noise_amplitude,
            size=kspace.shape,
        )
        kspace = kspace * np.exp(1j * phi)
    meas = kspace[list(mask.sampled_rows), :].reshape(-1)
    if noise.gaussian_sigma > 0:
        real = rng.normal(0.0, noise.gaussian_sigma, size=meas.size)
        imag = rng.normal(0.0, noise.gaussian_sigma, size=meas.size)
        meas = meas + real + 1j * imag
    return meas
