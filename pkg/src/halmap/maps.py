"""Hallucination, error and bias maps, and the structure-localizing transform.

The maps quantify how a reconstruction deviates from what the measurement
data can stably determine.  The measurement-space map compares the
reconstruction's measurement component against the truncated-pseudoinverse
estimate and needs no ground truth; the null-space map compares null
components against the true object and is gated by a pixelwise indicator
so that the truncated-pseudoinverse reconstruction itself always scores
zero.

The transform applied to a map to localize coherent structures runs, in
order: magnitude, object-support masking (Otsu), in-support histogram
equalization, Gaussian smoothing, percentile thresholding, and removal of
small connected components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .errors import DimensionsError, ParameterError
from .linop import ImageGrid, SpectralDecomposition
from .subspace import project_meas, project_null, truncated_pinv

#: Relative magnitude below which a null component counts as exactly zero.
INDICATOR_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TransformConfig:
    """Parameters of the structure-localizing transform."""

    gaussian_kernel_size: int = 7
    gaussian_sigma: float = 1.5
    percentile: float = 95.0
    min_component_area: int = 100
    connectivity: int = 8
    histogram_bins: int = 256

    def __post_init__(self):
        if self.gaussian_kernel_size < 1 or self.gaussian_kernel_size % 2 == 0:
            raise ParameterError("gaussian_kernel_size must be a positive odd integer")
        if self.gaussian_sigma <= 0:
            raise ParameterError("gaussian_sigma must be positive")
        if not 0 < self.percentile < 100:
            raise ParameterError("percentile must lie strictly between 0 and 100")
        if self.min_component_area < 1:
            raise ParameterError("min_component_area must be positive")
        if self.connectivity not in (4, 8):
            raise ParameterError("connectivity must be 4 or 8")
        if self.histogram_bins < 2:
            raise ParameterError("histogram_bins must be at least 2")


@dataclass(frozen=True)
class RegionStat:
    """Centroid and pixel area of one connected component."""

    component_id: int
    centroid_row: float
    centroid_col: float
    area: int


@dataclass
class HallucinationReport:
    """Per-image bundle of error and hallucination maps with region statistics.

    region_stats has one entry per localized-map kind: "specific_hm" for the
    thresholded null-space hallucination map and "specific_error" for the
    thresholded error map.
    """

    image_id: str
    error_map: ImageGrid
    meas_hm: ImageGrid
    meas_error_map: ImageGrid
    null_hm: ImageGrid
    shm_mask: ImageGrid
    specific_error_mask: ImageGrid
    region_stats: dict[str, list[RegionStat]] = field(default_factory=dict)


def _check_same_shape(a: ImageGrid, b: ImageGrid) -> None:
    if a.shape != b.shape:
        raise DimensionsError(f"image shapes {a.shape} and {b.shape} do not match")


def error_map(theta_hat: ImageGrid, theta: ImageGrid) -> ImageGrid:
    """Pixelwise difference between a reconstruction and the true object."""
    _check_same_shape(theta_hat, theta)
    return ImageGrid(theta_hat.data - theta.data)


def meas_hallucination_map(
    theta_hat: ImageGrid, dec: SpectralDecomposition, meas: np.ndarray
) -> ImageGrid:
    """Measurement-space hallucination map.

    Difference between the reconstruction's measurement component and the
    truncated-pseudoinverse estimate of the same data.  Requires no
    knowledge of the true object.
    """
    hat_meas = project_meas(dec, theta_hat)
    hat_tp = truncated_pinv(dec, meas)
    return ImageGrid(hat_meas.data - hat_tp.data)


def meas_error_map(
    theta_hat: ImageGrid, theta: ImageGrid, dec: SpectralDecomposition
) -> ImageGrid:
    """Error of the measurement component relative to the true object's."""
    _check_same_shape(theta_hat, theta)
    hat_meas = project_meas(dec, theta_hat)
    true_meas = project_meas(dec, theta)
    return ImageGrid(hat_meas.data - true_meas.data)


def null_hallucination_map(
    theta_hat: ImageGrid, theta: ImageGrid, dec: SpectralDecomposition
) -> ImageGrid:
    """Null-space hallucination map with the pixelwise indicator gate.

    The indicator is exactly zero wherever the reconstruction's null
    component magnitude is at most INDICATOR_TOLERANCE relative to the
    reconstruction's peak magnitude, so estimates carrying no null-space
    content yield the exact zero map.
    """
    _check_same_shape(theta_hat, theta)
    hat_null = project_null(dec, theta_hat)
    true_null = project_null(dec, theta)
    tau = INDICATOR_TOLERANCE * float(np.max(np.abs(theta_hat.data)))
    indicator = np.abs(hat_null.data) > tau
    return ImageGrid(np.where(indicator, hat_null.data - true_null.data, 0.0 + 0.0j))


def bias_map(estimates: Sequence[ImageGrid], theta: ImageGrid) -> ImageGrid:
    """Mean of an ensemble of estimates minus the true object."""
    if len(estimates) == 0:
        raise ParameterError("bias_map requires at least one estimate")
    for est in estimates:
        _check_same_shape(est, theta)
    mean = np.mean([est.data for est in estimates], axis=0)
    return ImageGrid(mean - theta.data)


def otsu_threshold(image: ImageGrid, bins: int = 256) -> float:
    """Threshold of the magnitude histogram maximizing between-class variance.

    Ties are broken toward the lower bin.  A constant image returns the
    constant itself, which makes the strictly-above support mask empty.
    """
    if bins < 2:
        raise ParameterError("bins must be at least 2")
    return _otsu_values(np.abs(image.data).reshape(-1), bins)


def _otsu_values(values: np.ndarray, bins: int) -> float:
    vmin = float(values.min())
    vmax = float(values.max())
    if vmax == vmin:
        return vmin
    hist, edges = np.histogram(values, bins=bins, range=(vmin, vmax))
    weights = hist / hist.sum()
    centers = (edges[:-1] + edges[1:]) / 2.0
    w0 = np.cumsum(weights)
    mu_cum = np.cumsum(weights * centers)
    mu_total = mu_cum[-1]
    # Between-class variance for the split after each bin t: classes
    # [0..t] and [t+1..bins-1].
    w0_head = w0[:-1]
    w1_head = 1.0 - w0_head
    valid = (w0_head > 0) & (w1_head > 0)
    sigma_b = np.zeros(bins - 1)
    mu0 = np.divide(mu_cum[:-1], w0_head, out=np.zeros(bins - 1), where=valid)
    mu1 = np.divide(mu_total - mu_cum[:-1], w1_head, out=np.zeros(bins - 1), where=valid)
    sigma_b[valid] = (w0_head * w1_head * (mu0 - mu1) ** 2)[valid]
    split = int(np.argmax(sigma_b))
    return float(edges[split + 1])


def histogram_equalize(image: ImageGrid, bins: int) -> ImageGrid:
    """CDF remap of the magnitude image onto [0, 1].

    Monotone nondecreasing in the input intensity.  A constant image maps
    everywhere to 1 (the CDF of its own value).
    """
    if bins < 2:
        raise ParameterError("bins must be at least 2")
    values = np.abs(image.data)
    return ImageGrid(_equalize_values(values.reshape(-1), bins).reshape(values.shape))


def _equalize_values(values: np.ndarray, bins: int) -> np.ndarray:
    vmin = float(values.min())
    vmax = float(values.max())
    if vmax == vmin:
        return np.ones_like(values, dtype=np.float64)
    hist, edges = np.histogram(values, bins=bins, range=(vmin, vmax))
    cdf = np.cumsum(hist) / values.size
    idx = np.minimum(
        ((values - vmin) / (vmax - vmin) * bins).astype(np.int64), bins - 1
    )
    return cdf[idx]


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Normalized 2D Gaussian kernel of odd side length ``size``."""
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    x, y = np.meshgrid(coords, coords)
    kernel = np.exp(-(x**2 + y**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def _connectivity_structure(connectivity: int) -> np.ndarray:
    if connectivity == 8:
        return np.ones((3, 3), dtype=bool)
    return np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _label_components(
    mask: np.ndarray, connectivity: int, min_area: int
) -> tuple[np.ndarray, list[RegionStat]]:
    """Filter small components and return stats ordered by top-left pixel."""
    labels, n_labels = ndimage.label(mask, structure=_connectivity_structure(connectivity))
    if n_labels == 0:
        return np.zeros_like(mask), []
    areas = np.bincount(labels.reshape(-1))[1:]
    keep = np.flatnonzero(areas >= min_area) + 1
    filtered = np.isin(labels, keep) & mask
    flat = labels.reshape(-1)
    ordered = sorted(keep.tolist(), key=lambda lab: int(np.argmax(flat == lab)))
    stats = []
    rows, cols = np.indices(mask.shape)
    for cid, lab in enumerate(ordered, start=1):
        sel = labels == lab
        stats.append(
            RegionStat(
                component_id=cid,
                centroid_row=float(rows[sel].mean()),
                centroid_col=float(cols[sel].mean()),
                area=int(sel.sum()),
            )
        )
    return filtered, stats


def specific_map(
    map_image: ImageGrid, support_reference: ImageGrid, cfg: TransformConfig
) -> tuple[ImageGrid, list[RegionStat]]:
    """Localize coherent structures in a map, returning a binary mask and stats.

    The support mask comes from Otsu's method on the magnitude of the
    reference image (normally the true object); pixels outside it are
    ignored throughout.  A constant reference has no support structure and
    yields an empty result, as does a map that vanishes on the support.
    """
    _check_same_shape(map_image, support_reference)
    magnitude = np.abs(map_image.data)
    ref_mag = np.abs(support_reference.data)
    threshold = _otsu_values(ref_mag.reshape(-1), cfg.histogram_bins)
    support = ref_mag > threshold
    empty = ImageGrid(np.zeros(map_image.shape, dtype=np.complex128))
    if not support.any():
        return empty, []
    in_support = magnitude[support]
    if float(in_support.max()) == 0.0:
        return empty, []

    equalized = np.zeros(map_image.shape, dtype=np.float64)
    equalized[support] = _equalize_values(in_support, cfg.histogram_bins)
    blurred = ndimage.convolve(
        equalized,
        gaussian_kernel(cfg.gaussian_kernel_size, cfg.gaussian_sigma),
        mode="constant",
        cval=0.0,
    )
    cutoff = float(np.percentile(blurred[support], cfg.percentile))
    binary = support & (blurred > cutoff)
    filtered, stats = _label_components(binary, cfg.connectivity, cfg.min_component_area)
    return ImageGrid(filtered.astype(np.complex128)), stats


def compute_report(
    meas: np.ndarray,
    dec: SpectralDecomposition,
    theta: ImageGrid,
    theta_hat: ImageGrid,
    cfg: TransformConfig | None = None,
    image_id: str = "",
) -> HallucinationReport:
    """Full per-image analysis of one reconstruction.

    Computes, in order: the truncated-pseudoinverse estimate, the
    reconstruction's measurement component, the null components of the
    truth and the reconstruction, the measurement- and null-space
    hallucination maps, and finally the localized structure masks of the
    null-space map and of the plain error map (both against the true
    object's support).
    """
    if cfg is None:
        cfg = TransformConfig()
    _check_same_shape(theta_hat, theta)
    err = error_map(theta_hat, theta)
    meas_hm = meas_hallucination_map(theta_hat, dec, meas)
    meas_err = meas_error_map(theta_hat, theta, dec)
    null_hm = null_hallucination_map(theta_hat, theta, dec)
    shm_mask, shm_stats = specific_map(null_hm, theta, cfg)
    err_mask, err_stats = specific_map(err, theta, cfg)
    return HallucinationReport(
        image_id=image_id,
        error_map=err,
        meas_hm=meas_hm,
        meas_error_map=meas_err,
        null_hm=null_hm,
        shm_mask=shm_mask,
        specific_error_mask=err_mask,
        region_stats={"specific_hm": shm_stats, "specific_error": err_stats},
    )
