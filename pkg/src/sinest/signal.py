"""Multi-cisoid data model, SNR convention and random scenario generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleScenarioError

TWO_PI = 2.0 * np.pi
REJECTION_BUDGET = 10**6


def as_rng(seed) -> np.random.Generator:
    """Build a PCG64 generator from an int, SeedSequence or existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def trial_seed(master: int, *counters: int) -> np.random.SeedSequence:
    """Independent stream for one trial, keyed by (master, counters...).

    The derivation is counter based, so a trial's noise does not depend on
    which worker runs it or in which order.
    """
    return np.random.SeedSequence(entropy=master, spawn_key=tuple(int(c) for c in counters))


def noise_variance(snr_db: float) -> float:
    """Noise power for a unit-amplitude reference: 10^(-snr/10), 0 at +inf."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return 10.0 ** (-snr_db / 10.0)


def wrapped_error(f_est, f_true):
    """Principal frequency difference on the unit circle, in (-0.5, 0.5]."""
    d = np.mod(np.asarray(f_est, dtype=float) - np.asarray(f_true, dtype=float), 1.0)
    d = np.where(d > 0.5, d - 1.0, d)
    if d.ndim == 0:
        return float(d)
    return d


def circular_gaps(freqs) -> np.ndarray:
    """Gaps between adjacent sorted frequencies, including the wrap-around pair."""
    f = np.sort(np.mod(np.asarray(freqs, dtype=float), 1.0))
    if f.size < 2:
        return np.array([1.0])
    return np.diff(np.append(f, f[0] + 1.0))


@dataclass(frozen=True)
class Scenario:
    """Generative description of one experiment.

    Components are stored in ascending frequency order; the constructor
    reorders amplitudes and phases along with the frequencies.
    """

    n: int
    amplitudes: np.ndarray
    phases: np.ndarray
    frequencies: np.ndarray
    snr_db: float = math.inf
    p: int = field(init=False)

    def __post_init__(self):
        amp = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        ph = np.atleast_1d(np.asarray(self.phases, dtype=float))
        fr = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        if not (amp.ndim == ph.ndim == fr.ndim == 1):
            raise ValueError("amplitudes, phases and frequencies must be vectors")
        if not (amp.size == ph.size == fr.size) or fr.size < 1:
            raise ValueError(
                f"p: amplitudes/phases/frequencies lengths differ or are empty "
                f"({amp.size}, {ph.size}, {fr.size})"
            )
        if int(self.n) < 1:
            raise ValueError(f"n: record length must be >= 1, got {self.n}")
        if np.any((fr < 0.0) | (fr >= 1.0)) or not np.all(np.isfinite(fr)):
            raise ValueError("freq: frequencies must lie in [0, 1)")
        if np.any(amp < 0.0) or not np.all(np.isfinite(amp)):
            raise ValueError("amp: amplitudes must be finite and nonnegative")
        if not np.all(np.isfinite(ph)):
            raise ValueError("phase: phases must be finite")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db: invalid value {self.snr_db}")
        order = np.argsort(fr, kind="stable")
        fr = fr[order]
        if fr.size > 1 and np.any(np.diff(fr) <= 0.0):
            raise ValueError("freq: frequencies must be distinct")
        for name, arr in (("amplitudes", amp[order]), ("phases", np.mod(ph[order], TWO_PI)),
                          ("frequencies", fr)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "snr_db", float(self.snr_db))
        object.__setattr__(self, "p", int(fr.size))

    @property
    def noise_variance(self) -> float:
        return noise_variance(self.snr_db)

    @property
    def complex_amplitudes(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    def with_snr(self, snr_db: float) -> "Scenario":
        return Scenario(self.n, self.amplitudes, self.phases, self.frequencies, snr_db)

    def with_phases(self, phases) -> "Scenario":
        return Scenario(self.n, self.amplitudes, phases, self.frequencies, self.snr_db)

    def to_text(self) -> str:
        """Serialize as a key=value block (12 significant digits)."""
        def vec(a):
            return ",".join(f"{v:.12g}" for v in a)

        return "\n".join([
            f"p={self.p}",
            f"n={self.n}",
            f"snr_db={self.snr_db:.12g}",
            f"amp={vec(self.amplitudes)}",
            f"phase={vec(self.phases)}",
            f"freq={vec(self.frequencies)}",
        ]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Scenario":
        kv = parse_key_values(text)
        return cls.from_mapping(kv)

    @classmethod
    def from_mapping(cls, kv) -> "Scenario":
        try:
            freq = parse_vector(kv["freq"])
            amp = parse_vector(kv["amp"]) if "amp" in kv else np.ones(len(freq))
            phase = parse_vector(kv["phase"]) if "phase" in kv else np.zeros(len(freq))
            n = int(kv["n"])
            snr = float(kv.get("snr_db", "inf"))
        except KeyError as exc:
            raise ValueError(f"{exc.args[0]}: missing required key") from None
        if "p" in kv and int(kv["p"]) != len(freq):
            raise ValueError(f"p: declared {kv['p']} but {len(freq)} frequencies given")
        return cls(n, amp, phase, freq, snr)


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed line (expected key=value): {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().lower()] = value.strip()
    return out


def parse_vector(value: str) -> np.ndarray:
    """Comma separated floats; the tokens 'pi' and 'pi/k' are accepted."""
    vals = []
    for tok in str(value).split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        vals.append(_parse_scalar(tok))
    return np.array(vals, dtype=float)


def _parse_scalar(tok: str) -> float:
    tok = tok.replace(" ", "")
    if "pi" in tok:
        num, _, den = tok.partition("/")
        coef = num.replace("*", "").replace("pi", "")
        c = 1.0 if coef in ("", "+") else (-1.0 if coef == "-" else float(coef))
        return c * math.pi / (float(den) if den else 1.0)
    return float(tok)


def synthesize(scenario: Scenario, seed=None) -> np.ndarray:
    """Noisy record x[n] = sum_l |v_l| exp(j(2 pi f_l n + phi_l)) + w[n].

    ``w`` is circular complex Gaussian with total variance
    ``scenario.noise_variance``; real and imaginary parts each carry half.
    """
    n = np.arange(scenario.n)
    x = np.exp(1j * (TWO_PI * np.outer(n, scenario.frequencies) + scenario.phases)) @ scenario.amplitudes
    s2 = scenario.noise_variance
    if s2 > 0.0:
        rng = as_rng(seed)
        w = rng.standard_normal((2, scenario.n))
        x = x + math.sqrt(s2 / 2.0) * (w[0] + 1j * w[1])
    return x


def random_scenario(p: int, n: int, seed=None, snr_db: float = math.inf) -> Scenario:
    """Random amplitudes U[0.5,1], phases U[0,2pi), frequencies U[0,1).

    Frequencies are redrawn until every circularly adjacent pair is at
    least 1/(2n) apart.
    """
    if p < 1:
        raise ValueError(f"p: must be >= 1, got {p}")
    if n < 2 * p:
        raise ValueError(f"n: must be >= 2p ({2 * p}), got {n}")
    rng = as_rng(seed)
    amp = rng.uniform(0.5, 1.0, p)
    phase = rng.uniform(0.0, TWO_PI, p)
    min_gap = 1.0 / (2.0 * n)
    for _ in range(REJECTION_BUDGET):
        f = rng.random(p)
        if p == 1 or circular_gaps(f).min() >= min_gap:
            return Scenario(n, amp, phase, f, snr_db)
    raise InfeasibleScenarioError(
        f"no frequency draw with separation {min_gap:g} after {REJECTION_BUDGET} tries (p={p}, n={n})"
    )
