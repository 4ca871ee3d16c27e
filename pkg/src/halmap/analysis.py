"""Quantitative evaluation: RMSE, SSIM, region-restricted SSIM, histograms.

SSIM follows the de-facto standard configuration (11x11 Gaussian window,
sigma 1.5, k1=0.01, k2=0.03) on image magnitudes; all knobs are exposed.
The per-pixel map uses Gaussian-weighted moments with reflected borders so
constant images stay constant under windowing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .errors import DimensionsError, ParameterError
from .linop import ImageGrid
from .maps import HallucinationReport, gaussian_kernel


def rmse(a: ImageGrid, b: ImageGrid) -> float:
    """Root mean squared difference of two complex grids."""
    if a.shape != b.shape:
        raise DimensionsError(f"image shapes {a.shape} and {b.shape} do not match")
    return float(np.sqrt(np.mean(np.abs(a.data - b.data) ** 2)))


@dataclass(frozen=True)
class SsimResult:
    value: float
    map: np.ndarray


def ssim(
    a: ImageGrid,
    b: ImageGrid,
    window: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
    data_range: float | None = None,
) -> SsimResult:
    """Structural similarity of two images, on their magnitudes.

    Returns the global value (mean of the per-pixel map) together with the
    map itself.  data_range defaults to the peak magnitude over both
    images.
    """
    if a.shape != b.shape:
        raise DimensionsError(f"image shapes {a.shape} and {b.shape} do not match")
    if window < 1 or window % 2 == 0:
        raise ParameterError("window must be a positive odd integer")
    if window > min(a.shape):
        raise ParameterError(
            f"window {window} exceeds smallest image dimension {min(a.shape)}"
        )
    x = np.abs(a.data)
    y = np.abs(b.data)
    if data_range is None:
        data_range = float(max(x.max(), y.max()))
        if data_range == 0.0:
            data_range = 1.0
    if data_range <= 0:
        raise ParameterError("data_range must be positive")
    kernel = gaussian_kernel(window, sigma)

    def smooth(img):
        return ndimage.correlate(img, kernel, mode="reflect")

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    mu_x = smooth(x)
    mu_y = smooth(y)
    var_x = smooth(x * x) - mu_x * mu_x
    var_y = smooth(y * y) - mu_y * mu_y
    cov = smooth(x * y) - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return SsimResult(value=float(ssim_map.mean()), map=ssim_map)


@dataclass(frozen=True)
class RegionSsim:
    """Mean SSIM over a region and over the remaining support (background).

    An empty region or background is reported as None, not zero.
    """

    region_mean: float | None
    background_mean: float | None


def region_ssim(
    a: ImageGrid,
    b: ImageGrid,
    region_mask: ImageGrid,
    support_mask: ImageGrid | None = None,
    **ssim_kwargs,
) -> RegionSsim:
    """Mean per-pixel SSIM over a region vs. the rest of the object support.

    The background is the support minus the region; with no support mask
    the whole image counts as support.
    """
    if region_mask.shape != a.shape:
        raise DimensionsError(
            f"region mask shape {region_mask.shape} does not match image shape {a.shape}"
        )
    result = ssim(a, b, **ssim_kwargs)
    region = np.abs(region_mask.data) > 0.5
    if support_mask is None:
        support = np.ones(a.shape, dtype=bool)
    else:
        if support_mask.shape != a.shape:
            raise DimensionsError(
                f"support mask shape {support_mask.shape} does not match image shape {a.shape}"
            )
        support = np.abs(support_mask.data) > 0.5
    region = region & support
    background = support & ~region
    region_mean = float(result.map[region].mean()) if region.any() else None
    background_mean = float(result.map[background].mean()) if background.any() else None
    return RegionSsim(region_mean=region_mean, background_mean=background_mean)


CENTROID_HEADER = ("image_id", "component_id", "centroid_row", "centroid_col", "area")


def export_centroid_scatter(
    reports: Sequence[HallucinationReport], which: str
) -> list[tuple]:
    """Rows of per-component centroids for an ensemble of reports.

    ``which`` selects the localized-map kind: "specific_hm" or
    "specific_error".  One row per component per image, in report order.
    """
    if which not in ("specific_hm", "specific_error"):
        raise ParameterError(f"unknown map kind '{which}'")
    rows = []
    for report in reports:
        for stat in report.region_stats.get(which, []):
            rows.append(
                (
                    report.image_id,
                    stat.component_id,
                    stat.centroid_row,
                    stat.centroid_col,
                    stat.area,
                )
            )
    return rows


PDF_HEADER = ("bin_left", "bin_right", "density")


def empirical_pdf(values: Iterable[float], bins: int) -> list[tuple[float, float, float]]:
    """Normalized histogram table; densities integrate to 1 over the bins."""
    data = np.asarray(list(values), dtype=np.float64)
    if data.size == 0:
        raise ParameterError("empirical_pdf requires at least one value")
    if bins < 1:
        raise ParameterError("bins must be positive")
    densities, edges = np.histogram(data, bins=bins, density=True)
    return [
        (float(edges[i]), float(edges[i + 1]), float(densities[i])) for i in range(bins)
    ]


def median_table(
    cells: dict[tuple[str, str], Sequence[float]]
) -> list[tuple[str, str, float]]:
    """Medians of value ensembles keyed by (method, distribution)."""
    rows = []
    for method, distribution in sorted(cells):
        samples = np.asarray(cells[(method, distribution)], dtype=np.float64)
        if samples.size == 0:
            raise ParameterError(
                f"empty ensemble for ({method}, {distribution})"
            )
        rows.append((method, distribution, float(np.median(samples))))
    return rows
