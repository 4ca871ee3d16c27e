"""Truncated pseudoinverse and measurement/null-space projections.

The projections are applied operator-side (composed matrix-vector or FFT
applications); N x N projector matrices are never materialized here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionsError, StabilityError
from .linop import ImageGrid, SpectralDecomposition, _check_meas, apply_adjoint, apply_forward


def truncated_pinv(dec: SpectralDecomposition, meas: np.ndarray) -> ImageGrid:
    """Stable linear estimate from a measurement vector.

    Sums 1/s_n * u_n * (v_n^dagger g) over the retained modes n <= P.  With
    P = 0 the result is the zero image.  For the FFT-mask realization this
    reduces to zero-filling the unsampled k-space rows and applying the
    unitary inverse FFT.
    """
    vec = _check_meas(dec.op, meas)
    if dec.truncation_index == 0:
        return ImageGrid.zeros(*dec.obj_shape)
    if dec.is_analytic:
        # All singular values are 1 and P equals the rank.
        return apply_adjoint(dec.op, vec)
    p = dec.truncation_index
    coeffs = (dec.left_vectors[:, :p].conj().T @ vec) / dec.singular_values[:p]
    return ImageGrid.from_vector(dec.right_vectors[:, :p] @ coeffs, dec.obj_shape)


def project_meas(dec: SpectralDecomposition, image: ImageGrid) -> ImageGrid:
    """Orthogonal projection onto the generalized measurement space.

    Equals the composition of the truncated pseudoinverse with the forward
    map; idempotent and self-adjoint.
    """
    if image.shape != dec.obj_shape:
        raise DimensionsError(
            f"image shape {image.shape} does not match decomposition object shape {dec.obj_shape}"
        )
    if dec.truncation_index == 0:
        return ImageGrid.zeros(*dec.obj_shape)
    if dec.is_analytic:
        return apply_adjoint(dec.op, apply_forward(dec.op, image))
    p = dec.truncation_index
    basis = dec.right_vectors[:, :p]
    return ImageGrid.from_vector(basis @ (basis.conj().T @ image.vector), dec.obj_shape)


def project_null(dec: SpectralDecomposition, image: ImageGrid) -> ImageGrid:
    """Orthogonal projection onto the generalized null space (I - P_meas)."""
    meas_part = project_meas(dec, image)
    return ImageGrid(image.data - meas_part.data)


@dataclass(frozen=True)
class StabilityReport:
    """Observed stability of the truncated pseudoinverse on a pair of data vectors."""

    lhs: float
    rhs: float
    alpha: float


def verify_stability(
    dec: SpectralDecomposition, g1: np.ndarray, g2: np.ndarray
) -> StabilityReport:
    """Check ||pinv(g1) - pinv(g2)|| <= alpha * ||g1 - g2|| with alpha = 1/s_P.

    With P = 0 the estimate map is identically zero, so alpha is reported
    as 0 and the left-hand side vanishes.  Raises StabilityError if the
    inequality fails beyond a 1e-12 slack, which indicates a broken
    decomposition.
    """
    v1 = _check_meas(dec.op, g1)
    v2 = _check_meas(dec.op, g2)
    rhs = float(np.linalg.norm(v1 - v2))
    if dec.truncation_index == 0:
        return StabilityReport(lhs=0.0, rhs=rhs, alpha=0.0)
    diff = truncated_pinv(dec, v1 - v2)
    lhs = float(np.linalg.norm(diff.vector))
    alpha = 1.0 / float(dec.singular_values[dec.truncation_index - 1])
    if lhs > alpha * rhs + 1e-12:
        raise StabilityError(
            f"stability bound violated: {lhs} > {alpha} * {rhs} + 1e-12"
        )
    return StabilityReport(lhs=lhs, rhs=rhs, alpha=alpha)
