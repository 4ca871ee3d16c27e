"""Linear imaging operators and their spectral decomposition.

Two operator realizations are provided: an explicit dense matrix, and the
composition of a unitary 2D FFT with a Cartesian row-sampling mask.  The
FFT uses unitary normalization in both directions (each scaled by
1/sqrt(height*width)), so every nonzero singular value of the masked
operator equals 1 and the zero-filled inverse FFT coincides with the
pseudoinverse.

k-space ordering is DC-first (no fftshift), row-major.  A measurement
vector lists the sampled rows in ascending order, each row contributing
``width`` consecutive samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DimensionsError, ParameterError, SizeError

#: Default stability tolerance: truncates only singular values <= 1e-6.
DEFAULT_EPSILON = 1e6

#: Dense factorization guard, in matrix entries.
MAX_DENSE_ENTRIES = 4096 * 4096


def _as_complex_2d(data: np.ndarray) -> np.ndarray:
    arr = np.asarray(data)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionsError(f"expected a nonempty 2D array, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ParameterError("image contains non-finite samples")
    return arr


@dataclass(frozen=True)
class ImageGrid:
    """2D raster of complex samples with explicit height and width.

    Real inputs are lifted with zero imaginary part; the payload is always
    complex128 and is frozen after construction.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = _as_complex_2d(self.data).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def vector(self) -> np.ndarray:
        """Row-major coefficient vector of length height*width."""
        return self.data.reshape(-1)

    @classmethod
    def from_array(cls, data: np.ndarray) -> "ImageGrid":
        return cls(data)

    @classmethod
    def from_vector(cls, vec: np.ndarray, shape: tuple[int, int]) -> "ImageGrid":
        vec = np.asarray(vec).reshape(-1)
        if vec.size != shape[0] * shape[1]:
            raise DimensionsError(
                f"vector of length {vec.size} does not fill a {shape[0]}x{shape[1]} grid"
            )
        return cls(vec.reshape(shape))

    @classmethod
    def zeros(cls, height: int, width: int) -> "ImageGrid":
        return cls(np.zeros((height, width), dtype=np.complex128))


@dataclass(frozen=True)
class MaskSpec:
    """Binary Cartesian k-space row-sampling pattern.

    ``sampled_rows`` are indices into the DC-first row ordering.  ``factor``
    and ``offset`` record the uniform-undersampling parameters when the mask
    was built that way; they are informational for serialization.
    """

    height: int
    width: int
    sampled_rows: tuple[int, ...]
    factor: int | None = None
    offset: int | None = None

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ParameterError("mask dimensions must be positive")
        rows = tuple(int(r) for r in self.sampled_rows)
        if not rows:
            raise ParameterError("sampled_rows must be nonempty")
        if any(r < 0 or r >= self.height for r in rows):
            raise ParameterError(f"sampled_rows must lie in [0, {self.height})")
        if any(b <= a for a, b in zip(rows, rows[1:])):
            raise ParameterError("sampled_rows must be strictly sorted")
        object.__setattr__(self, "sampled_rows", rows)

    @property
    def n_measurements(self) -> int:
        return len(self.sampled_rows) * self.width

    def row_indicator(self) -> np.ndarray:
        """Boolean (height,) array, True on sampled rows."""
        ind = np.zeros(self.height, dtype=bool)
        ind[list(self.sampled_rows)] = True
        return ind


@dataclass(frozen=True)
class DenseOperator:
    """Linear map realized as an explicit M x N complex matrix.

    ``obj_shape`` fixes how length-N coefficient vectors are interpreted as
    image grids (row-major).
    """

    matrix: np.ndarray
    obj_shape: tuple[int, int]

    def __post_init__(self):
        mat = np.ascontiguousarray(np.asarray(self.matrix), dtype=np.complex128)
        if mat.ndim != 2:
            raise DimensionsError(f"operator matrix must be 2D, got shape {mat.shape}")
        h, w = self.obj_shape
        if h * w != mat.shape[1]:
            raise DimensionsError(
                f"obj_shape {self.obj_shape} incompatible with {mat.shape[1]} matrix columns"
            )
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "obj_shape", (int(h), int(w)))

    @property
    def range_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def domain_dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class FftMaskOperator:
    """Unitary 2D FFT followed by retention of the sampled k-space rows."""

    mask: MaskSpec

    @property
    def obj_shape(self) -> tuple[int, int]:
        return (self.mask.height, self.mask.width)

    @property
    def range_dim(self) -> int:
        return self.mask.n_measurements

    @property
    def domain_dim(self) -> int:
        return self.mask.height * self.mask.width


OperatorDescriptor = Union[DenseOperator, FftMaskOperator]


def _check_image(op: OperatorDescriptor, image: ImageGrid) -> None:
    if image.shape != tuple(op.obj_shape):
        raise DimensionsError(
            f"image shape {image.shape} does not match operator object shape {tuple(op.obj_shape)}"
        )


def _check_meas(op: OperatorDescriptor, meas: np.ndarray) -> np.ndarray:
    vec = np.asarray(meas, dtype=np.complex128).reshape(-1)
    if vec.size != op.range_dim:
        raise DimensionsError(
            f"measurement length {vec.size} does not match operator range dimension {op.range_dim}"
        )
    return vec


def apply_forward(op: OperatorDescriptor, image: ImageGrid) -> np.ndarray:
    """Apply the forward map to an image, returning the measurement vector."""
    _check_image(op, image)
    if isinstance(op, DenseOperator):
        return op.matrix @ image.vector
    kspace = np.fft.fft2(image.data, norm="ortho")
    return kspace[list(op.mask.sampled_rows), :].reshape(-1)


def apply_adjoint(op: OperatorDescriptor, meas: np.ndarray) -> ImageGrid:
    """Apply the adjoint map to a measurement vector.

    For the FFT-mask realization this zero-fills the unsampled rows and
    applies the unitary inverse 2D FFT.
    """
    vec = _check_meas(op, meas)
    if isinstance(op, DenseOperator):
        return ImageGrid.from_vector(op.matrix.conj().T @ vec, op.obj_shape)
    mask = op.mask
    kspace = np.zeros((mask.height, mask.width), dtype=np.complex128)
    kspace[list(mask.sampled_rows), :] = vec.reshape(len(mask.sampled_rows), mask.width)
    return ImageGrid(np.fft.ifft2(kspace, norm="ortho"))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Singular triples of an operator plus a stability truncation index.

    Singular values are nonincreasing and strictly positive (numerically
    zero modes are dropped from the rank).  The truncation index P keeps
    the modes with mu_n = s_n^2 strictly above 1/epsilon^2.

    For the FFT-mask realization the decomposition is analytic: all
    singular values equal 1, the singular vectors are never materialized
    as a matrix, and the projection operations are applied via FFTs.
    """

    op: OperatorDescriptor
    singular_values: np.ndarray
    truncation_index: int
    epsilon: float
    right_vectors: np.ndarray | None = field(default=None, repr=False)
    left_vectors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        svals = np.asarray(self.singular_values, dtype=np.float64).copy()
        svals.flags.writeable = False
        object.__setattr__(self, "singular_values", svals)

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    @property
    def obj_shape(self) -> tuple[int, int]:
        return tuple(self.op.obj_shape)

    @property
    def range_dim(self) -> int:
        return self.op.range_dim

    @property
    def is_analytic(self) -> bool:
        return self.right_vectors is None

    def right_vector(self, n: int) -> np.ndarray:
        """n-th right singular vector u_n as a length-N vector (0-based)."""
        if not 0 <= n < self.rank:
            raise ParameterError(f"mode index {n} outside [0, {self.rank})")
        if self.right_vectors is not None:
            return self.right_vectors[:, n]
        indicator = np.zeros(self.range_dim, dtype=np.complex128)
        indicator[n] = 1.0
        return apply_adjoint(self.op, indicator).vector

    def left_vector(self, n: int) -> np.ndarray:
        """n-th left singular vector v_n as a length-M vector (0-based)."""
        if not 0 <= n < self.rank:
            raise ParameterError(f"mode index {n} outside [0, {self.rank})")
        if self.left_vectors is not None:
            return self.left_vectors[:, n]
        indicator = np.zeros(self.range_dim, dtype=np.complex128)
        indicator[n] = 1.0
        return indicator


def truncation_point(squared_singular_values: np.ndarray, epsilon: float) -> int:
    """Largest P with mu_P > 1/epsilon^2, for nonincreasing mu.

    A mode whose mu equals 1/epsilon^2 exactly is truncated.
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    cutoff = 1.0 / epsilon**2
    return int(np.count_nonzero(squared_singular_values > cutoff))


def compute_svd(
    op: OperatorDescriptor,
    epsilon: float = DEFAULT_EPSILON,
    max_dense_entries: int = MAX_DENSE_ENTRIES,
) -> SpectralDecomposition:
    """Compute the spectral decomposition of an operator.

    Dense operators are factorized with a full SVD, guarded by
    ``max_dense_entries``.  FFT-mask operators take the analytic path:
    rank equals the number of sampled k-space entries and all singular
    values are exactly 1, so P is the full rank whenever epsilon > 1 and
    zero otherwise.
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    if isinstance(op, FftMaskOperator):
        rank = op.range_dim
        svals = np.ones(rank)
        p = rank if truncation_point(svals, epsilon) > 0 else 0
        return SpectralDecomposition(op, svals, p, epsilon)
    if op.matrix.size > max_dense_entries:
        raise SizeError(
            f"dense operator with {op.matrix.size} entries exceeds the guard of "
            f"{max_dense_entries}; use the FFT-mask realization for large problems"
        )
    u_left, svals, vh = np.linalg.svd(op.matrix, full_matrices=False)
    # Numerical rank: drop modes at roundoff scale.
    if svals.size and svals[0] > 0:
        tol = svals[0] * max(op.matrix.shape) * np.finfo(np.float64).eps
        rank = int(np.count_nonzero(svals > tol))
    else:
        rank = 0
    svals = svals[:rank]
    p = truncation_point(svals**2, epsilon)
    return SpectralDecomposition(
        op,
        svals,
        p,
        epsilon,
        right_vectors=vh[:rank].conj().T,
        left_vectors=u_left[:, :rank],
    )
