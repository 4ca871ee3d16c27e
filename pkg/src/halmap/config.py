"""JSON run configuration for the CLI stages.

Every section is optional and falls back to defaults.  Validation errors
name the offending field by its JSON path (for example
"noise.gaussian_sigma: must be a nonnegative number").
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError, ParameterError
from .maps import TransformConfig
from .recon import PlsTvConfig
from .simulate import NoiseConfig

DEFAULT_EPSILON = 1e6


@dataclass(frozen=True)
class RunConfig:
    mask_factor: int = 3
    mask_offset: int = 0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    epsilon: float = DEFAULT_EPSILON
    transform: TransformConfig = field(default_factory=TransformConfig)
    plstv: PlsTvConfig = field(default_factory=PlsTvConfig)
    sweep_lambdas: tuple[float, ...] = ()
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    ssim_data_range: float | None = None
    pdf_bins: int = 20

    def to_dict(self) -> dict:
        return {
            "mask": {"factor": self.mask_factor, "offset": self.mask_offset},
            "noise": {
                "gaussian_sigma": self.noise.gaussian_sigma,
                "phase_noise_amplitude": self.noise.phase_noise_amplitude,
                "seed": self.noise.seed,
                "phase_seed": self.noise.phase_seed,
            },
            "epsilon": self.epsilon,
            "transform": {
                "gaussian_kernel_size": self.transform.gaussian_kernel_size,
                "gaussian_sigma": self.transform.gaussian_sigma,
                "percentile": self.transform.percentile,
                "min_component_area": self.transform.min_component_area,
                "connectivity": self.transform.connectivity,
                "histogram_bins": self.transform.histogram_bins,
            },
            "plstv": {
                "lambda": self.plstv.lam,
                "max_iters": self.plstv.max_iters,
                "step_size": self.plstv.step_size,
                "tv_flavor": self.plstv.tv_flavor,
                "tolerance": self.plstv.tolerance,
                "prox_iters": self.plstv.prox_iters,
            },
            "sweep": {"lambdas": list(self.sweep_lambdas)},
            "ssim": {
                "window": self.ssim_window,
                "sigma": self.ssim_sigma,
                "k1": self.ssim_k1,
                "k2": self.ssim_k2,
                "data_range": self.ssim_data_range,
            },
            "analysis": {"pdf_bins": self.pdf_bins},
        }


def _expect(payload: dict, path: str, key: str, kind, default):
    if key not in payload:
        return default
    value = payload[key]
    where = f"{path}.{key}" if path else key
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParameterError(f"{where}: must be a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParameterError(f"{where}: must be an integer")
        return int(value)
    if isinstance(value, str):
        return value
    raise ParameterError(f"{where}: must be a string")


def _section(payload: dict, key: str) -> dict:
    section = payload.get(key, {})
    if not isinstance(section, dict):
        raise ParameterError(f"{key}: must be an object")
    return section


def config_from_dict(payload: dict) -> RunConfig:
    if not isinstance(payload, dict):
        raise ParameterError("config root: must be a JSON object")
    defaults = RunConfig()

    mask = _section(payload, "mask")
    factor = _expect(mask, "mask", "factor", int, defaults.mask_factor)
    offset = _expect(mask, "mask", "offset", int, defaults.mask_offset)
    if factor < 1:
        raise ParameterError("mask.factor: must be a positive integer")
    if offset < 0 or offset >= factor:
        raise ParameterError("mask.offset: must lie in [0, mask.factor)")

    noise_sec = _section(payload, "noise")
    sigma = _expect(noise_sec, "noise", "gaussian_sigma", float, 0.0)
    amplitude = _expect(noise_sec, "noise", "phase_noise_amplitude", float, 0.0)
    seed = _expect(noise_sec, "noise", "seed", int, 0)
    phase_seed = noise_sec.get("phase_seed")
    if phase_seed is not None and (isinstance(phase_seed, bool) or not isinstance(phase_seed, int)):
        raise ParameterError("noise.phase_seed: must be an integer or null")
    try:
        noise = NoiseConfig(
            gaussian_sigma=sigma,
            phase_noise_amplitude=amplitude,
            seed=seed,
            phase_seed=phase_seed,
        )
    except ParameterError as exc:
        raise ParameterError(f"noise: {exc}") from exc

    epsilon = _expect(payload, "", "epsilon", float, defaults.epsilon)
    if epsilon <= 0:
        raise ParameterError("epsilon: must be positive")

    tr = _section(payload, "transform")
    try:
        transform = TransformConfig(
            gaussian_kernel_size=_expect(tr, "transform", "gaussian_kernel_size", int, 7),
            gaussian_sigma=_expect(tr, "transform", "gaussian_sigma", float, 1.5),
            percentile=_expect(tr, "transform", "percentile", float, 95.0),
            min_component_area=_expect(tr, "transform", "min_component_area", int, 100),
            connectivity=_expect(tr, "transform", "connectivity", int, 8),
            histogram_bins=_expect(tr, "transform", "histogram_bins", int, 256),
        )
    except ParameterError as exc:
        raise ParameterError(f"transform: {exc}") from exc

    pl = _section(payload, "plstv")
    step = pl.get("step_size", "auto")
    if isinstance(step, bool) or not isinstance(step, (int, float, str)):
        raise ParameterError("plstv.step_size: must be a positive number or 'auto'")
    try:
        plstv = PlsTvConfig(
            lam=_expect(pl, "plstv", "lambda", float, 0.0),
            max_iters=_expect(pl, "plstv", "max_iters", int, 500),
            step_size=step if isinstance(step, str) else float(step),
            tv_flavor=_expect(pl, "plstv", "tv_flavor", str, "isotropic"),
            tolerance=_expect(pl, "plstv", "tolerance", float, 1e-6),
            prox_iters=_expect(pl, "plstv", "prox_iters", int, 100),
        )
    except ParameterError as exc:
        raise ParameterError(f"plstv: {exc}") from exc

    sweep = _section(payload, "sweep")
    lambdas = sweep.get("lambdas", [])
    if not isinstance(lambdas, list) or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in lambdas
    ):
        raise ParameterError("sweep.lambdas: must be a list of numbers")

    ss = _section(payload, "ssim")
    window = _expect(ss, "ssim", "window", int, defaults.ssim_window)
    if window < 1 or window % 2 == 0:
        raise ParameterError("ssim.window: must be a positive odd integer")
    data_range = ss.get("data_range")
    if data_range is not None:
        if isinstance(data_range, bool) or not isinstance(data_range, (int, float)) or data_range <= 0:
            raise ParameterError("ssim.data_range: must be a positive number or null")
        data_range = float(data_range)

    an = _section(payload, "analysis")
    pdf_bins = _expect(an, "analysis", "pdf_bins", int, defaults.pdf_bins)
    if pdf_bins < 1:
        raise ParameterError("analysis.pdf_bins: must be positive")

    return RunConfig(
        mask_factor=factor,
        mask_offset=offset,
        noise=noise,
        epsilon=epsilon,
        transform=transform,
        plstv=plstv,
        sweep_lambdas=tuple(float(v) for v in lambdas),
        ssim_window=window,
        ssim_sigma=_expect(ss, "ssim", "sigma", float, defaults.ssim_sigma),
        ssim_k1=_expect(ss, "ssim", "k1", float, defaults.ssim_k1),
        ssim_k2=_expect(ss, "ssim", "k2", float, defaults.ssim_k2),
        ssim_data_range=data_range,
        pdf_bins=pdf_bins,
    )


def load_config(path: str | Path | None) -> RunConfig:
    """Load a run config; a missing path gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})", offset=exc.pos) from exc
    return config_from_dict(payload)
