"""Paired-energy transmit/superpose/detect pipeline and vector aggregators.

A scalar is split into positive and negative parts, each part is
amplitude-encoded on its own resource element (normalized by the average
channel power, with a random phase dither), all clients superpose through
independently sampled fading, and the receiver subtracts the two received
energies.  Chip diversity repeats the pair over M independently faded
chips; SIMO reception repeats it over R receive antennas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import sample_dither, sample_fading, sample_general_fading, sample_noise
from .streams import StreamKey

__all__ = [
    "ScalarInputs",
    "ReedPhyConfig",
    "PairedEnergies",
    "encode_branch_symbol",
    "simulate_paired_observation",
    "sample_estimates",
    "reed_estimate_single",
    "reed_estimate_chip",
    "aggregate_ideal",
    "aggregate_reed",
    "aggregate_coherent_csit",
]

# branch indices inside stream paths
_PLUS, _MINUS = 0, 1
# reserved client slot for receiver noise inside stream paths
_NOISE_SLOT_OFFSET = 0  # noise uses client index K (one past the last client)


@dataclass(frozen=True)
class ScalarInputs:
    """Per-coordinate client values and their positive/negative split."""

    values: np.ndarray

    def __init__(self, values):
        object.__setattr__(self, "values", np.asarray(values, dtype=float))
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("values must be a non-empty 1-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @property
    def pos(self) -> np.ndarray:
        return np.maximum(self.values, 0.0)

    @property
    def neg(self) -> np.ndarray:
        return np.maximum(-self.values, 0.0)

    @property
    def s_plus(self) -> float:
        return float(self.pos.sum())

    @property
    def s_minus(self) -> float:
        return float(self.neg.sum())

    @property
    def signed_sum(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class ReedPhyConfig:
    """Physical-layer configuration of the paired-energy aggregator."""

    eta: float = 1.0
    noise_var: float = 0.0
    mean_powers: np.ndarray = field(default_factory=lambda: np.ones(1))
    chip_weights: np.ndarray = field(default_factory=lambda: np.ones(1))
    antennas: int = 1
    kappa: float = 2.0
    ideal_channel: bool = False  # deterministic test mode, see aggregate_reed

    def __post_init__(self):
        object.__setattr__(self, "mean_powers", np.asarray(self.mean_powers, dtype=float))
        object.__setattr__(self, "chip_weights", np.asarray(self.chip_weights, dtype=float))
        if self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")
        if np.any(self.mean_powers <= 0):
            raise ValueError("every mean power must be > 0")
        if np.any(self.chip_weights < 0) or self.chip_weights.sum() <= 0:
            raise ValueError("chip weights must be >= 0 with positive sum")
        if self.antennas < 1:
            raise ValueError(f"antennas must be >= 1, got {self.antennas}")
        if self.kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")

    @property
    def n_chips(self) -> int:
        return int(self.chip_weights.size)

    @property
    def weight_sum(self) -> float:
        return float(self.chip_weights.sum())

    def mean_power_for(self, k: int) -> float:
        # a scalar mean-power array is shared by all clients
        if self.mean_powers.size == 1:
            return float(self.mean_powers[0])
        return float(self.mean_powers[k])


@dataclass(frozen=True)
class PairedEnergies:
    """Received energies of one positive/negative resource-element pair."""

    e_plus: float
    e_minus: float
    chip_index: int = 0
    antenna_index: int = 0

    def __post_init__(self):
        if self.e_plus < 0 or self.e_minus < 0:
            raise ValueError("energies must be nonnegative")


def encode_branch_symbol(u: float, branch: str, chip_weight: float, eta: float,
                         mean_power: float, dither: complex) -> complex:
    """Transmit symbol sqrt(eta * c * [u]_branch) / mu * dither."""
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    if mean_power <= 0:
        raise ValueError(f"mean_power must be > 0, got {mean_power}")
    if chip_weight < 0:
        raise ValueError(f"chip_weight must be >= 0, got {chip_weight}")
    if branch == "plus":
        part = max(u, 0.0)
    elif branch == "minus":
        part = max(-u, 0.0)
    else:
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    return np.sqrt(eta * chip_weight * part) / np.sqrt(mean_power) * dither


def _fading(key: StreamKey, mean_power: float, kappa: float, size=None):
    if kappa == 2.0:
        return sample_fading(key, mean_power, size)
    return sample_general_fading(key, mean_power, kappa, size)


def simulate_paired_observation(inputs: ScalarInputs, cfg: ReedPhyConfig,
                                key: StreamKey, chip: int, antenna: int) -> PairedEnergies:
    """One positive/negative pair: superpose all clients through fresh
    fading, add receiver noise per branch, return squared magnitudes.

    Stream paths are (chip, branch, client[, antenna]); dithers do not
    depend on the antenna because the transmitted symbol is common to all
    receive antennas.
    """
    if not 0 <= chip < cfg.n_chips:
        raise ValueError(f"chip index {chip} out of range [0, {cfg.n_chips})")
    if not 0 <= antenna < cfg.antennas:
        raise ValueError(f"antenna index {antenna} out of range [0, {cfg.antennas})")
    K = inputs.values.size
    c = float(cfg.chip_weights[chip])
    energies = []
    for branch_idx, branch in ((_PLUS, "plus"), (_MINUS, "minus")):
        if cfg.ideal_channel:
            # degenerate test mode: branch energies superpose additively
            part = inputs.pos if branch == "plus" else inputs.neg
            e = cfg.eta * c * float(part.sum())
            if cfg.noise_var > 0:
                z = sample_noise(key.child(chip, branch_idx, K, antenna), cfg.noise_var)
                e += abs(z) ** 2
            energies.append(e)
            continue
        y = 0.0 + 0.0j
        for k in range(K):
            mu2 = cfg.mean_power_for(k)
            dither = sample_dither(key.child(chip, branch_idx, k))
            h = _fading(key.child(chip, branch_idx, k, antenna), mu2, cfg.kappa)
            a = encode_branch_symbol(float(inputs.values[k]), branch, c,
                                     cfg.eta, mu2, dither)
            y += h * a
        z = sample_noise(key.child(chip, branch_idx, K, antenna), cfg.noise_var)
        energies.append(abs(y + z) ** 2)
    return PairedEnergies(e_plus=energies[0], e_minus=energies[1],
                          chip_index=chip, antenna_index=antenna)


def reed_estimate_single(obs: PairedEnergies, eta: float) -> float:
    """Single-shot signed estimate (e_plus - e_minus) / eta, unclipped."""
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    return (obs.e_plus - obs.e_minus) / eta


def reed_estimate_chip(observations: list[PairedEnergies], cfg: ReedPhyConfig) -> float:
    """Chip/antenna-diverse estimate: normalized sum of energy differences.

    The observations must cover every (chip, antenna) pair exactly once;
    with R antennas the normalizer is eta * C_M * R.
    """
    seen = {(o.chip_index, o.antenna_index) for o in observations}
    want = {(m, r) for m in range(cfg.n_chips) for r in range(cfg.antennas)}
    if len(seen) != len(observations) or seen != want:
        raise ValueError("observations must cover each (chip, antenna) pair exactly once")
    total = sum(o.e_plus - o.e_minus for o in observations)
    return total / (cfg.eta * cfg.weight_sum * cfg.antennas)


def sample_estimates(inputs: ScalarInputs, cfg: ReedPhyConfig, key: StreamKey,
                     n_trials: int) -> np.ndarray:
    """Vectorized Monte Carlo: n_trials independent chip-diverse estimates.

    Trials occupy the draw axis of each (chip, branch, client, antenna)
    substream, so the full pipeline (encode, superpose, detect) is run
    without per-trial key churn.
    """
    eta = cfg.eta
    K = inputs.values.size
    pos, neg = inputs.pos, inputs.neg
    total = np.zeros(n_trials)
    for m in range(cfg.n_chips):
        c = float(cfg.chip_weights[m])
        for branch_idx, part in ((_PLUS, pos), (_MINUS, neg)):
            amps = np.sqrt(eta * c * part)  # |a_k| * mu_k
            dithers = [
                sample_dither(key.child(m, branch_idx, k), size=n_trials)
                for k in range(K)
            ]
            for r in range(cfg.antennas):
                y = np.zeros(n_trials, dtype=complex)
                for k in range(K):
                    if amps[k] == 0.0:
                        continue
                    mu2 = cfg.mean_power_for(k)
                    h = _fading(key.child(m, branch_idx, k, r), mu2, cfg.kappa,
                                size=n_trials)
                    y += h * (amps[k] / np.sqrt(mu2)) * dithers[k]
                z = sample_noise(key.child(m, branch_idx, K, r), cfg.noise_var,
                                 size=n_trials)
                y += z
                sign = 1.0 if branch_idx == _PLUS else -1.0
                total += sign * np.abs(y) ** 2
    return total / (eta * cfg.weight_sum * cfg.antennas)


def aggregate_ideal(increments: list[np.ndarray] | np.ndarray, dim: int) -> np.ndarray:
    """Coordinate-wise arithmetic mean of client increments."""
    arr = np.asarray(increments, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"increments must be (K, {dim}), got shape {arr.shape}")
    return arr.mean(axis=0)


def aggregate_reed(increments: list[np.ndarray] | np.ndarray, cfg: ReedPhyConfig,
                   key: StreamKey) -> np.ndarray:
    """Noncoherent aggregation of client increments, coordinate-wise.

    Coordinate j uses scalar inputs u_{k,j} = [increment_k]_j / K so the
    estimate targets the ideal mean.  All coordinates of one (chip,
    branch, client, antenna) substream are drawn as a single vector;
    fading, dithers and noise are therefore independent across
    coordinates, clients, branches, chips and antennas.

    In ideal-channel test mode the fading is pinned at its root-mean
    power with zero phase, dithers are 1 and branch energies superpose
    additively (no cross terms), so with zero noise the output equals
    aggregate_ideal exactly.
    """
    arr = np.asarray(increments, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"increments must be a (K, d) array, got shape {arr.shape}")
    K, d = arr.shape
    u = arr / K
    eta = cfg.eta
    total = np.zeros(d)
    for m in range(cfg.n_chips):
        c = float(cfg.chip_weights[m])
        for branch_idx, part in ((_PLUS, np.maximum(u, 0.0)), (_MINUS, np.maximum(-u, 0.0))):
            sign = 1.0 if branch_idx == _PLUS else -1.0
            if cfg.ideal_channel:
                # energies add with no cross terms: |y|^2 = eta*c*S_branch + |z|^2
                for r in range(cfg.antennas):
                    e = eta * c * part.sum(axis=0)
                    if cfg.noise_var > 0:
                        z = sample_noise(key.child(m, branch_idx, K, r),
                                         cfg.noise_var, size=d)
                        e = e + np.abs(z) ** 2
                    total += sign * e
                continue
            amps = np.sqrt(eta * c * part)  # (K, d)
            dithers = [
                sample_dither(key.child(m, branch_idx, k), size=d)
                for k in range(K)
            ]
            for r in range(cfg.antennas):
                y = np.zeros(d, dtype=complex)
                for k in range(K):
                    mu2 = cfg.mean_power_for(k)
                    h = _fading(key.child(m, branch_idx, k, r), mu2, cfg.kappa, size=d)
                    y += h * (amps[k] / np.sqrt(mu2)) * dithers[k]
                z = sample_noise(key.child(m, branch_idx, K, r), cfg.noise_var, size=d)
                y += z
                total += sign * np.abs(y) ** 2
    return total / (eta * cfg.weight_sum * cfg.antennas)


def aggregate_coherent_csit(increments: list[np.ndarray] | np.ndarray, eta: float,
                            noise_var: float, key: StreamKey) -> np.ndarray:
    """Coherent channel-inversion reference: ideal mean plus Re(z)/sqrt(eta)
    with fresh receiver noise per coordinate."""
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    if noise_var < 0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    arr = np.asarray(increments, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"increments must be a (K, d) array, got shape {arr.shape}")
    mean = arr.mean(axis=0)
    if noise_var == 0:
        return mean
    z = sample_noise(key, noise_var, size=arr.shape[1])
    return mean + z.real / np.sqrt(eta)
