"""Direction of arrival on a half-wavelength uniform linear array.

Snapshots are columns of an (M_ant, K) matrix; the sensor index plays the
role of time, so the cascade and likelihood stack run unchanged with the
spatial frequency f = sin(theta) / 2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .cascade import CascadeConfig, CascadeTrace, estimate
from .signal import as_rng, noise_variance, parse_key_values, parse_vector
from .subspace import FrequencyEstimate


class SourceModel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CONSTANT_MODULUS = "constant-modulus"


@dataclass(frozen=True)
class ArrayScenario:
    p: int
    m_ant: int
    k_snap: int
    angles_deg: np.ndarray
    snr_db: float = math.inf
    source_model: SourceModel = SourceModel.GAUSSIAN
    source_phases: np.ndarray | None = None  # constant-modulus sources only

    def __post_init__(self):
        ang = np.atleast_1d(np.asarray(self.angles_deg, dtype=float))
        if ang.size != self.p or self.p < 1:
            raise ValueError(f"angles_deg: expected p={self.p} angles, got {ang.size}")
        if np.any(np.abs(ang) >= 90.0) or not np.all(np.isfinite(ang)):
            raise ValueError(f"angles_deg: angles must lie in (-90, 90), got {ang.tolist()}")
        if not self.p < self.m_ant:
            raise ValueError(f"m_ant: need more antennas than sources ({self.m_ant} <= {self.p})")
        if self.k_snap < 1:
            raise ValueError(f"k_snap: need at least one snapshot, got {self.k_snap}")
        if math.isnan(self.snr_db):
            raise ValueError("snr_db: NaN")
        ph = np.zeros(self.p) if self.source_phases is None else np.asarray(self.source_phases, float)
        if ph.size != self.p:
            raise ValueError("source_phases: length must equal p")
        object.__setattr__(self, "angles_deg", ang)
        object.__setattr__(self, "source_phases", ph)
        object.__setattr__(self, "source_model", SourceModel(self.source_model))

    @property
    def spatial_frequencies(self) -> np.ndarray:
        return np.mod(np.sin(np.deg2rad(self.angles_deg)) / 2.0, 1.0)

    def with_snr(self, snr_db: float) -> "ArrayScenario":
        return ArrayScenario(self.p, self.m_ant, self.k_snap, self.angles_deg, snr_db,
                             self.source_model, self.source_phases)

    def to_text(self) -> str:
        return "\n".join([
            f"p={self.p}",
            f"m_ant={self.m_ant}",
            f"k_snap={self.k_snap}",
            f"snr_db={self.snr_db:.12g}",
            "angles_deg=" + ",".join(f"{a:.12g}" for a in self.angles_deg),
            f"source_model={self.source_model.value}",
        ]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ArrayScenario":
        return cls.from_mapping(parse_key_values(text))

    @classmethod
    def from_mapping(cls, kv) -> "ArrayScenario":
        try:
            ang = parse_vector(kv["angles_deg"])
            return cls(
                int(kv.get("p", len(ang))),
                int(kv["m_ant"]),
                int(kv["k_snap"]),
                ang,
                float(kv.get("snr_db", "inf")),
                SourceModel(kv.get("source_model", "gaussian")),
            )
        except KeyError as exc:
            raise ValueError(f"{exc.args[0]}: missing required key") from None


def steering_vector(theta_deg, m_ant: int) -> np.ndarray:
    """a(theta)_n = exp(j pi n sin(theta)), one column per angle."""
    s = np.sin(np.deg2rad(np.atleast_1d(theta_deg)))
    return np.exp(1j * np.pi * np.outer(np.arange(m_ant), s))


def synthesize_snapshots(s: ArrayScenario, seed=None) -> np.ndarray:
    """(M_ant, K) matrix of array read-outs."""
    rng = as_rng(seed)
    a = steering_vector(s.angles_deg, s.m_ant)
    if s.source_model is SourceModel.GAUSSIAN:
        z = rng.standard_normal((2, s.p, s.k_snap))
        src = (z[0] + 1j * z[1]) / math.sqrt(2.0)
    else:
        src = np.repeat(np.exp(1j * s.source_phases)[:, None], s.k_snap, axis=1)
    x = a @ src
    s2 = noise_variance(s.snr_db)
    if s2 > 0.0:
        w = rng.standard_normal((2, s.m_ant, s.k_snap))
        x = x + math.sqrt(s2 / 2.0) * (w[0] + 1j * w[1])
    return x


def frequencies_to_angles(freqs) -> np.ndarray:
    """theta = arcsin(2 f) with f taken as its principal value in [-0.5, 0.5)."""
    f = np.mod(np.asarray(freqs, dtype=float) + 0.5, 1.0) - 0.5
    arg = 2.0 * f
    if np.any(np.abs(arg) > 1.0):
        raise ValueError(f"non-physical spatial frequency {freqs}")
    return np.sort(np.rad2deg(np.arcsin(arg)))


@dataclass(frozen=True)
class DoaResult:
    angles_deg: np.ndarray
    estimate: FrequencyEstimate
    trace: CascadeTrace


def doa_estimate(snapshots, cfg: CascadeConfig) -> DoaResult:
    """Cascade on array snapshots; ``cfg.m`` is the subarray (window) size."""
    x = np.asarray(snapshots, dtype=complex)
    if x.ndim == 1:
        x = x[:, None]
    if not cfg.p < cfg.m <= x.shape[0]:
        raise ValueError(f"m: subarray size must satisfy p < m <= M_ant, got m={cfg.m}")
    est, trace = estimate(x, cfg)
    return DoaResult(frequencies_to_angles(est.frequencies), est, trace)
