"""Reconstruction methods: truncated pseudoinverse and TV-penalized least squares.

The TV solver minimizes ||g - H theta||_2^2 + lambda * ||theta||_TV with an
accelerated proximal-gradient scheme (FISTA with a monotone restart: if a
momentum step raises the objective, the step is retaken without momentum,
which keeps the objective sequence nonincreasing).  The TV proximal
subproblem is solved by fast gradient projection on the dual, with the
dual variables warm-started across outer iterations.

TV of a complex image is the sum of the TV seminorms of the real and
imaginary channels, so the proximal step separates over channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, ParameterError, SolverError
from .io import read_cgrid, read_pgm
from .linop import ImageGrid, OperatorDescriptor, SpectralDecomposition, apply_adjoint, apply_forward
from .subspace import truncated_pinv


@dataclass(frozen=True)
class PlsTvConfig:
    """Solver parameters for the TV-penalized least-squares reconstruction."""

    lam: float = 0.0
    max_iters: int = 500
    step_size: float | str = "auto"
    tv_flavor: str = "isotropic"
    tolerance: float = 1e-6
    prox_iters: int = 100

    def __post_init__(self):
        if self.lam < 0:
            raise ParameterError("lambda must be nonnegative")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be positive")
        if isinstance(self.step_size, str):
            if self.step_size != "auto":
                raise ParameterError("step_size must be a positive number or 'auto'")
        elif self.step_size <= 0:
            raise ParameterError("step_size must be positive")
        if self.tv_flavor not in ("isotropic", "anisotropic"):
            raise ParameterError("tv_flavor must be 'isotropic' or 'anisotropic'")
        if self.tolerance < 0:
            raise ParameterError("tolerance must be nonnegative")
        if self.prox_iters < 1:
            raise ParameterError("prox_iters must be positive")


@dataclass
class PlsTvResult:
    image: ImageGrid
    objectives: list[float]
    iterations: int
    converged: bool
    step_size: float


def _diff_v(x: np.ndarray) -> np.ndarray:
    return x[1:, :] - x[:-1, :]


def _diff_h(x: np.ndarray) -> np.ndarray:
    return x[:, 1:] - x[:, :-1]


def _div_adjoint(r: np.ndarray, s: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Adjoint of the forward-difference map (r, s) -> sum of channel adjoints."""
    out = np.zeros(shape)
    out[:-1, :] -= r
    out[1:, :] += r
    out[:, :-1] -= s
    out[:, 1:] += s
    return out


def tv_seminorm(image: np.ndarray, flavor: str = "isotropic") -> float:
    """TV of a complex 2D array: channel-wise TV of real and imaginary parts."""
    total = 0.0
    for channel in (np.real(image), np.imag(image)):
        dv = _diff_v(channel)
        dh = _diff_h(channel)
        if flavor == "anisotropic":
            total += float(np.abs(dv).sum() + np.abs(dh).sum())
        else:
            h, w = channel.shape
            pv = np.zeros((h, w))
            pv[:-1, :] = dv
            ph = np.zeros((h, w))
            ph[:, :-1] = dh
            total += float(np.sqrt(pv**2 + ph**2).sum())
    return total


def _project_dual(r: np.ndarray, s: np.ndarray, flavor: str, shape: tuple[int, int]):
    if flavor == "anisotropic":
        return np.clip(r, -1.0, 1.0), np.clip(s, -1.0, 1.0)
    h, w = shape
    pv = np.zeros((h, w))
    pv[:-1, :] = r
    ph = np.zeros((h, w))
    ph[:, :-1] = s
    scale = np.maximum(1.0, np.sqrt(pv**2 + ph**2))
    return r / scale[:-1, :], s / scale[:, :-1]


def prox_tv_real(
    v: np.ndarray,
    alpha: float,
    flavor: str = "isotropic",
    max_iters: int = 100,
    tol: float = 1e-10,
    dual_init: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Proximal map of alpha*TV at a real 2D point, by dual fast gradient projection.

    Returns the prox output and the final dual pair for warm starts.
    """
    h, w = v.shape
    if alpha == 0 or (h == 1 and w == 1):
        return v.copy(), (np.zeros((max(h - 1, 0), w)), np.zeros((h, max(w - 1, 0))))
    if dual_init is None:
        r = np.zeros((h - 1, w))
        s = np.zeros((h, w - 1))
    else:
        r, s = dual_init[0].copy(), dual_init[1].copy()
    rb, sb = r, s
    t = 1.0
    step = 1.0 / (8.0 * alpha)
    x = v
    for _ in range(max_iters):
        x_prev = x
        x = v - alpha * _div_adjoint(rb, sb, (h, w))
        r_new, s_new = _project_dual(rb + step * _diff_v(x), sb + step * _diff_h(x), flavor, (h, w))
        t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        rb = r_new + ((t - 1.0) / t_new) * (r_new - r)
        sb = s_new + ((t - 1.0) / t_new) * (s_new - s)
        r, s, t = r_new, s_new, t_new
        if np.linalg.norm(x - x_prev) <= tol * max(np.linalg.norm(v), 1.0):
            break
    x = v - alpha * _div_adjoint(r, s, (h, w))
    return x, (r, s)


def prox_tv(
    v: np.ndarray,
    alpha: float,
    flavor: str = "isotropic",
    max_iters: int = 100,
    dual_init: tuple | None = None,
) -> tuple[np.ndarray, tuple]:
    """Channel-separable complex TV prox; see prox_tv_real."""
    re_init, im_init = (None, None) if dual_init is None else dual_init
    re, re_dual = prox_tv_real(np.real(v), alpha, flavor, max_iters, dual_init=re_init)
    im, im_dual = prox_tv_real(np.imag(v), alpha, flavor, max_iters, dual_init=im_init)
    return re + 1j * im, (re_dual, im_dual)


def squared_operator_norm(
    op: OperatorDescriptor, iters: int = 50, rtol: float = 1e-8, seed: int = 0
) -> float:
    """Largest squared singular value of H, by power iteration on H^dagger H."""
    h, w = op.obj_shape
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
    x /= np.linalg.norm(x)
    value = 0.0
    for _ in range(iters):
        y = apply_adjoint(op, apply_forward(op, ImageGrid(x))).data
        new_value = float(np.linalg.norm(y))
        if new_value == 0.0:
            return 0.0
        x = y / new_value
        if abs(new_value - value) <= rtol * max(new_value, 1e-300):
            return new_value
        value = new_value
    return value


def recon_tp(meas: np.ndarray, dec: SpectralDecomposition) -> ImageGrid:
    """Truncated-pseudoinverse reconstruction (named method wrapper)."""
    return truncated_pinv(dec, meas)


def _objective(op, meas, x: np.ndarray, lam: float, flavor: str) -> float:
    residual = apply_forward(op, ImageGrid(x)) - meas
    value = float(np.vdot(residual, residual).real)
    if lam > 0:
        value += lam * tv_seminorm(x, flavor)
    return value


def recon_plstv(
    meas: np.ndarray, op: OperatorDescriptor, cfg: PlsTvConfig
) -> PlsTvResult:
    """Minimize ||g - H theta||^2 + lambda*TV(theta) by monotone FISTA.

    The automatic step size is 1/(2 * ||H||^2), the reciprocal of the
    Lipschitz constant of the data-fidelity gradient.  Raises SolverError
    if the objective increases by more than 1e-6 relative for 10
    consecutive iterations, which indicates a too-large manual step.
    """
    meas = np.asarray(meas, dtype=np.complex128).reshape(-1)
    if isinstance(cfg.step_size, str):
        lipschitz = 2.0 * squared_operator_norm(op)
        if lipschitz == 0.0:
            raise SolverError("operator is numerically zero; no step size exists")
        step = 1.0 / lipschitz
    else:
        step = float(cfg.step_size)
    lam, flavor = cfg.lam, cfg.tv_flavor

    x = apply_adjoint(op, meas).data
    y = x
    t = 1.0
    dual = None
    objectives = [_objective(op, meas, x, lam, flavor)]
    f_x = objectives[0]
    rises = 0
    converged = False
    iterations = 0
    for k in range(cfg.max_iters):
        iterations = k + 1
        grad = 2.0 * apply_adjoint(op, apply_forward(op, ImageGrid(y)) - meas).data
        z, dual = prox_tv(y - step * grad, step * lam, flavor, cfg.prox_iters, dual)
        f_z = _objective(op, meas, z, lam, flavor)
        if f_z > f_x:
            # Momentum overshoot: retake the step from the last accepted point.
            t = 1.0
            grad = 2.0 * apply_adjoint(op, apply_forward(op, ImageGrid(x)) - meas).data
            z, dual = prox_tv(x - step * grad, step * lam, flavor, cfg.prox_iters, dual)
            f_z = _objective(op, meas, z, lam, flavor)
        t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = z + ((t - 1.0) / t_new) * (z - x)
        x, t = z, t_new
        objectives.append(f_z)
        if f_z > f_x * (1.0 + 1e-6) + 1e-300:
            rises += 1
            if rises >= 10:
                raise SolverError(
                    f"objective increased for 10 consecutive iterations at step size {step}"
                )
        else:
            rises = 0
        delta = abs(f_x - f_z)
        if delta <= cfg.tolerance * max(abs(f_x), 1e-30):
            f_x = f_z
            converged = True
            break
        f_x = f_z
    return PlsTvResult(
        image=ImageGrid(x),
        objectives=objectives,
        iterations=iterations,
        converged=converged,
        step_size=step,
    )


@dataclass
class SweepResult:
    chosen_lambda: float
    mean_rmse: dict[float, float]
    table: list[tuple[float, int, float]] = field(default_factory=list)


def sweep_lambda(
    dataset: Sequence[tuple[np.ndarray, ImageGrid]],
    op: OperatorDescriptor,
    candidate_lambdas: Sequence[float],
    base_cfg: PlsTvConfig | None = None,
) -> SweepResult:
    """Pick the penalty weight with the lowest mean RMSE over a dataset.

    Reconstructs every measurement at every candidate; ties go to the
    smaller candidate.  The table holds one (lambda, dataset index, rmse)
    row per cell.
    """
    from .analysis import rmse

    if len(dataset) == 0:
        raise ParameterError("sweep requires a nonempty dataset")
    if len(candidate_lambdas) == 0:
        raise ParameterError("sweep requires at least one candidate lambda")
    if base_cfg is None:
        base_cfg = PlsTvConfig()
    table = []
    means: dict[float, float] = {}
    for lam in candidate_lambdas:
        cfg = replace(base_cfg, lam=float(lam))
        errors = []
        for index, (meas, theta) in enumerate(dataset):
            result = recon_plstv(meas, op, cfg)
            err = rmse(result.image, theta)
            errors.append(err)
            table.append((float(lam), index, err))
        means[float(lam)] = float(np.mean(errors))
    chosen = min(sorted(means), key=lambda lam: means[lam])
    return SweepResult(chosen_lambda=chosen, mean_rmse=means, table=table)


def ingest_external(path: str | Path) -> ImageGrid:
    """Load an externally produced reconstruction (.cgrid or binary PGM)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".cgrid":
        return read_cgrid(path)
    if suffix == ".pgm":
        return read_pgm(path)
    raise FormatError(f"{path}: unsupported reconstruction format '{suffix}'")
