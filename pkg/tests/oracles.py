"""Independent oracle implementations used to derive expected test values.

Everything here is deliberately written from first principles (explicit
formulas, loops, exhaustive enumeration) and stays independent of the
library code paths it checks.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np


def dense_dft_mask_matrix(height: int, width: int, sampled_rows) -> np.ndarray:
    """Explicit matrix of the unitary 2D DFT followed by row selection.

    Built from the exponential formula directly, without any FFT routine.
    Measurement ordering matches the library contract: sampled rows
    ascending, each contributing ``width`` consecutive k-space columns.
    """
    n = height * width
    rows = sorted(sampled_rows)
    matrix = np.zeros((len(rows) * width, n), dtype=np.complex128)
    norm = 1.0 / np.sqrt(height * width)
    for mi, kr in enumerate(rows):
        for kc in range(width):
            row = mi * width + kc
            for y in range(height):
                for x in range(width):
                    phase = -2.0j * np.pi * (kr * y / height + kc * x / width)
                    matrix[row, y * width + x] = norm * np.exp(phase)
    return matrix


def truncated_pinv_matrix(matrix: np.ndarray, epsilon: float) -> np.ndarray:
    """N x M truncated pseudoinverse from an independent SVD."""
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    cutoff = 1.0 / epsilon**2
    keep = s**2 > cutoff
    if not keep.any():
        return np.zeros((matrix.shape[1], matrix.shape[0]), dtype=np.complex128)
    return (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T


def projector_matrix(matrix: np.ndarray, epsilon: float) -> np.ndarray:
    """N x N measurement-space projector H+_P H, materialized."""
    return truncated_pinv_matrix(matrix, epsilon) @ matrix


def flood_fill_components(mask: np.ndarray, connectivity: int = 8):
    """Connected components of a boolean mask by breadth-first flood fill.

    Returns a list of pixel-index lists, ordered by the first pixel found
    in row-major scan order.
    """
    height, width = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    if connectivity == 8:
        offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        offsets = [(-1, 0), (0, -1), (0, 1), (1, 0)]
    components = []
    for r in range(height):
        for c in range(width):
            if not mask[r, c] or seen[r, c]:
                continue
            queue = deque([(r, c)])
            seen[r, c] = True
            pixels = []
            while queue:
                pr, pc = queue.popleft()
                pixels.append((pr, pc))
                for dr, dc in offsets:
                    nr, nc = pr + dr, pc + dc
                    if 0 <= nr < height and 0 <= nc < width and mask[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        queue.append((nr, nc))
            components.append(pixels)
    return components


def brute_force_otsu(values: np.ndarray, bins: int) -> float:
    """Otsu threshold by exhaustive search over every histogram split."""
    vmin, vmax = float(values.min()), float(values.max())
    if vmax == vmin:
        return vmin
    hist, edges = np.histogram(values, bins=bins, range=(vmin, vmax))
    centers = (edges[:-1] + edges[1:]) / 2.0
    total = hist.sum()
    best_split, best_score = 0, -1.0
    for split in range(bins - 1):
        n0 = hist[: split + 1].sum()
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            score = 0.0
        else:
            mu0 = float((hist[: split + 1] * centers[: split + 1]).sum()) / n0
            mu1 = float((hist[split + 1 :] * centers[split + 1 :]).sum()) / n1
            score = (n0 / total) * (n1 / total) * (mu0 - mu1) ** 2
        if score > best_score:
            best_score, best_split = score, split
    return float(edges[best_split + 1])


def exhaustive_tv_prox_1d(y: np.ndarray, lam: float) -> np.ndarray:
    """Exact minimizer of 0.5*||x - y||^2 + lam*sum|x_{i+1} - x_i|.

    Enumerates every partition of the signal into contiguous constant
    blocks and every sign pattern of the block-to-block jumps, solves the
    resulting stationarity equations in closed form, and keeps the best
    consistent candidate.  Exponential in len(y); intended for len <= 10.
    """
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if n == 0 or lam < 0:
        raise ValueError("need a nonempty signal and lam >= 0")
    if lam == 0:
        return y.copy()

    best_x, best_val = None, np.inf
    for cuts in itertools.product([False, True], repeat=n - 1):
        blocks = []
        start = 0
        for i, cut in enumerate(cuts):
            if cut:
                blocks.append((start, i + 1))
                start = i + 1
        blocks.append((start, n))
        sizes = np.array([b - a for a, b in blocks], dtype=np.float64)
        sums = np.array([y[a:b].sum() for a, b in blocks])
        n_blocks = len(blocks)
        sign_patterns = (
            itertools.product([-1.0, 1.0], repeat=n_blocks - 1)
            if n_blocks > 1
            else [()]
        )
        for signs in sign_patterns:
            sig = np.array(signs, dtype=np.float64)
            left = np.concatenate(([0.0], sig))
            right = np.concatenate((sig, [0.0]))
            v = (sums + lam * (right - left)) / sizes
            jumps = np.diff(v)
            if n_blocks > 1 and not np.all(np.sign(jumps) == sig):
                continue
            x = np.repeat(v, sizes.astype(int))
            val = 0.5 * np.sum((x - y) ** 2) + lam * np.sum(np.abs(jumps))
            if val < best_val - 1e-15:
                best_val, best_x = val, x
    return best_x


def ssim_direct(
    x: np.ndarray,
    y: np.ndarray,
    window: int,
    sigma: float,
    k1: float,
    k2: float,
    data_range: float,
) -> np.ndarray:
    """Per-pixel structural similarity by direct per-pixel loops.

    Uses a normalized Gaussian window and symmetric (reflected) borders.
    """
    half = window // 2
    coords = np.arange(window) - half
    gx, gy = np.meshgrid(coords, coords)
    kernel = np.exp(-(gx**2 + gy**2) / (2.0 * sigma**2))
    kernel /= kernel.sum()
    xp = np.pad(x, half, mode="symmetric")
    yp = np.pad(y, half, mode="symmetric")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    out = np.zeros_like(x, dtype=np.float64)
    for r in range(x.shape[0]):
        for c in range(x.shape[1]):
            wx = xp[r : r + window, c : c + window]
            wy = yp[r : r + window, c : c + window]
            mx = float((kernel * wx).sum())
            my = float((kernel * wy).sum())
            vx = float((kernel * wx * wx).sum()) - mx * mx
            vy = float((kernel * wy * wy).sum()) - my * my
            cov = float((kernel * wx * wy).sum()) - mx * my
            out[r, c] = ((2 * mx * my + c1) * (2 * cov + c2)) / (
                (mx * mx + my * my + c1) * (vx + vy + c2)
            )
    return out


def cvx_tv_prox_2d(v: np.ndarray, alpha: float, flavor: str = "isotropic") -> np.ndarray:
    """High-accuracy TV proximal map of one real channel via convex programming."""
    import cvxpy as cp

    h, w = v.shape
    z = cp.Variable((h, w))
    terms = 0.5 * cp.sum_squares(z - v)
    dv = z[1:, :] - z[:-1, :] if h > 1 else None
    dh = z[:, 1:] - z[:, :-1] if w > 1 else None
    if flavor == "anisotropic":
        tv = 0
        if dv is not None:
            tv = tv + cp.sum(cp.abs(dv))
        if dh is not None:
            tv = tv + cp.sum(cp.abs(dh))
    else:
        pv = cp.vstack([dv, cp.Constant(np.zeros((1, w)))]) if h > 1 else cp.Constant(np.zeros((h, w)))
        ph = cp.hstack([dh, cp.Constant(np.zeros((h, 1)))]) if w > 1 else cp.Constant(np.zeros((h, w)))
        stacked = cp.vstack([cp.vec(pv, order="C"), cp.vec(ph, order="C")])
        tv = cp.sum(cp.norm(stacked, 2, axis=0))
    problem = cp.Problem(cp.Minimize(terms + alpha * tv))
    problem.solve(solver=cp.CLARABEL, verbose=False)
    return np.asarray(z.value)


def cvx_prox_residual(x, grad, step, lam, flavor="isotropic"):
    """Subgradient residual of the TV-penalized objective near a candidate point.

    Computes z = prox_{step*lam*TV}(x - step*grad) with the convex-program
    prox, and returns (residual_vector, z) where
    residual = (x - z)/step + grad(z) - grad(x) evaluated by the caller's
    gradient difference; here only the (x - z)/step part is formed, the
    caller supplies gradient terms.
    """
    v = x - step * grad
    z_re = cvx_tv_prox_2d(np.real(v), step * lam, flavor)
    z_im = cvx_tv_prox_2d(np.imag(v), step * lam, flavor)
    z = z_re + 1j * z_im
    return (x - z) / step, z
