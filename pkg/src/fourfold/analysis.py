"""Closed-form latency, power, space-bandwidth and operation-count models.

All quantities are SI. Defaults reproduce the metasurface design point:
SLM refresh 1 ms, detection 1 ms, a 100 kB frame over a 2.5 Gbit/s link,
3 mm focal length.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from fourfold.errors import InvalidInputError

SPEED_OF_LIGHT = 299_792_458.0

# CPU forward time per AlexNet layer at 227x227 (ms); reference data only
REFERENCE_LAYER_TIMES_MS = (2.75, 4.11, 1.39, 1.55, 1.15)
REFERENCE_LAYER_SHARE = (0.251, 0.376, 0.126, 0.142, 0.105)
REFERENCE_ACCURACY = {
    "alexnet_pretrained": 0.964,
    "opcnn_l1_pretrained_weights": 0.4998,
    "opcnn_l1_trained": 0.871,
    "alexnet_sqnl": 0.873,
}


@dataclass(frozen=True)
class PerfParams:
    n: int = 227
    n_kernel: int = 96
    k: int = 11
    # eta, t, p and the electronic constants have no published values;
    # these are illustrative defaults
    eta: float = 0.5
    t: float = 0.9
    p: int = 5
    detector_power_per_pixel: float = 1e-6
    alpha: float = 1.0
    p_switching: float = 1e-12
    t_source: float = 1e-3
    t_detect: float = 1e-3
    data_bytes: float = 100_000
    link_rate: float = 2.5e9
    focal_length: float = 3e-3
    electronic_s_per_pixel: float = 9.28e-9

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise InvalidInputError(f"{name} must be positive, got {value}")
        if self.eta > 1 or self.t > 1:
            raise InvalidInputError("eta and t must not exceed 1")


@dataclass(frozen=True)
class LatencyBreakdown:
    t_source: float
    t_4f: float
    t_detect: float
    t_data: float

    @property
    def total(self) -> float:
        return self.t_source + self.t_4f + self.t_detect + self.t_data

    def as_dict(self) -> dict:
        return {**asdict(self), "total": self.total}


def latency_model(params: PerfParams) -> LatencyBreakdown:
    t_data = 8.0 * params.data_bytes / params.link_rate
    t_4f = 4.0 * params.focal_length / SPEED_OF_LIGHT
    return LatencyBreakdown(params.t_source, t_4f, params.t_detect, t_data)


def optical_power(params: PerfParams) -> float:
    """Source power (W) needed to deliver the per-pixel detector power to every output."""
    return (
        params.n**2 * params.n_kernel * params.detector_power_per_pixel
        / (params.eta * params.t**params.p)
    )


def electronic_energy(params: PerfParams) -> float:
    return params.alpha * params.n**2 * params.k**2 * params.n_kernel * params.p_switching


def space_bandwidth(D: float, f: float, wavelength: float) -> tuple[float, float]:
    """Resolvable samples per side, and in total, for aperture ``D`` at focal length ``f``."""
    if not (D > 0 and f > 0 and wavelength > 0):
        raise InvalidInputError("aperture, focal length and wavelength must be positive")
    per_side = D**2 / (wavelength * f)
    return per_side, per_side**2


def mac_count(n: int, k: int, n_kernel: int = 1) -> int:
    if n < 1 or k < 1 or n_kernel < 1:
        raise InvalidInputError("counts must be positive")
    return int(n) ** 2 * int(k) ** 2 * int(n_kernel)


def crossover_pixels(optical_total_latency: float, electronic_s_per_pixel: float) -> float:
    """Pixel count at which a linear electronic runtime overtakes the fixed optical latency."""
    if not electronic_s_per_pixel > 0:
        raise InvalidInputError("electronic time per pixel must be positive")
    return optical_total_latency / electronic_s_per_pixel
