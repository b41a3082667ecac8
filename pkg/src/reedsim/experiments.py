"""Experiment drivers shared by the CLI and the test suite.

Moment-law validation points (Monte Carlo against closed form) and
config-driven FedAvg runs with the matched-seed contract: the aggregator
choice never perturbs data partitioning, model initialization or local
minibatch order.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Any

import numpy as np

from .datasets import (LabeledDataset, PartitionSpec, load_idx_dataset, partition,
                       synth_dataset)
from .estimator import ReedPhyConfig, ScalarInputs, sample_estimates
from .fedavg import FedRunConfig, Objective, RoundTrace, build_objective, run_fedavg
from .config import resolve_noise_var
from .moments import variance_chip
from .streams import StreamKey

__all__ = [
    "MomentPoint",
    "MomentResult",
    "default_moment_matrix",
    "validate_point",
    "build_experiment_data",
    "run_single_trial",
]


@dataclass(frozen=True)
class MomentPoint:
    """One Monte Carlo vs closed-form comparison point.

    cf_cfg lets a negative-control fixture deliberately mismatch the
    closed-form side; it defaults to the simulated configuration.
    """

    point_id: str
    inputs: ScalarInputs
    cfg: ReedPhyConfig
    cf_cfg: ReedPhyConfig | None = None


@dataclass(frozen=True)
class MomentResult:
    point_id: str
    s: float
    mc_mean: float
    cf_mean: float
    mc_var: float
    cf_var: float
    rel_err: float
    passed: bool


def default_moment_matrix() -> list[MomentPoint]:
    """Validation matrix spanning eta in {0.5, 1, 10}, noise_var in
    {0, 0.5, 2}, K in {1, 3, 10} and M in {1, 2, 4}."""
    rng = StreamKey(20260826).generator()
    points = []
    grid = [
        # (eta, noise_var, K, M)
        (0.5, 0.0, 1, 1),
        (0.5, 0.5, 3, 2),
        (0.5, 2.0, 10, 4),
        (1.0, 0.0, 3, 4),
        (1.0, 0.5, 1, 1),
        (1.0, 0.5, 10, 2),
        (1.0, 2.0, 3, 1),
        (10.0, 0.0, 10, 2),
        (10.0, 0.5, 3, 4),
        (10.0, 2.0, 1, 2),
        (10.0, 2.0, 10, 1),
        (1.0, 2.0, 10, 4),
    ]
    for i, (eta, nv, K, M) in enumerate(grid):
        u = np.round(rng.uniform(-2.0, 2.0, size=K), 3)
        if np.all(u == 0):
            u[0] = 1.0
        points.append(MomentPoint(
            point_id=f"p{i:02d}_eta{eta}_nv{nv}_K{K}_M{M}",
            inputs=ScalarInputs(u),
            cfg=ReedPhyConfig(eta=eta, noise_var=nv, chip_weights=np.ones(M)),
        ))
    return points


def validate_point(point: MomentPoint, n_trials: int, tolerance: float,
                   seed: int) -> MomentResult:
    """Monte Carlo moments vs closed form at one parameter point.

    Pass requires the empirical mean inside its 4-sigma CLT band around
    the closed-form mean and the empirical variance within the relative
    tolerance of the closed-form variance (absolute tolerance at zero
    variance)."""
    cf = variance_chip(point.inputs, point.cf_cfg or point.cfg)
    stream_id = zlib.crc32(point.point_id.encode()) & 0x7FFFFFFF
    draws = sample_estimates(point.inputs, point.cfg,
                             StreamKey(seed).child(stream_id), n_trials)
    mc_mean = float(draws.mean())
    mc_var = float(draws.var(ddof=1))
    if cf.variance > 0:
        rel_err = abs(mc_var - cf.variance) / cf.variance
        mean_ok = abs(mc_mean - cf.mean) <= 4.0 * np.sqrt(cf.variance / n_trials)
    else:
        rel_err = abs(mc_var)
        mean_ok = mc_mean == cf.mean
    passed = bool(mean_ok and rel_err <= tolerance)
    return MomentResult(point.point_id, point.inputs.signed_sum, mc_mean, cf.mean,
                        mc_var, cf.variance, rel_err, passed)


def _phy_from_config(cfg: dict[str, Any]) -> ReedPhyConfig:
    if cfg["phy.chip_weights"] is not None:
        weights = np.asarray(cfg["phy.chip_weights"], dtype=float)
    else:
        weights = np.full(cfg["phy.chips"], cfg["phy.chip_weight"])
    return ReedPhyConfig(
        eta=cfg["phy.eta"],
        noise_var=resolve_noise_var(cfg),
        mean_powers=np.array([cfg["phy.mean_power"]]),
        chip_weights=weights,
        antennas=cfg["phy.antennas"],
        kappa=cfg["phy.kappa"],
        ideal_channel=cfg["phy.ideal_channel"],
    )


def build_experiment_data(cfg: dict[str, Any], trial: int
                          ) -> tuple[LabeledDataset, LabeledDataset | None, list[np.ndarray]]:
    """Train set, optional test set and client partition for one trial.

    Depends only on the data config, base seed and trial index, never on
    the aggregator (matched-seed contract)."""
    data_seed = cfg["seed"] * 1_000_003 + trial
    if cfg["data.source"] == "idx":
        train = load_idx_dataset(cfg["data.idx_images"], cfg["data.idx_labels"])
        test = None
        if cfg["data.idx_test_images"] is not None:
            test = load_idx_dataset(cfg["data.idx_test_images"],
                                    cfg["data.idx_test_labels"])
    else:
        kind = cfg["data.synth_kind"]
        n_train, n_test = cfg["data.synth_n"], cfg["data.test_n"]
        if kind == "gaussian-blobs" and n_test > 0:
            # one pool so train and test share the class means
            pool = synth_dataset(kind, n_train + n_test, seed=data_seed,
                                 classes=cfg["data.classes"], p=cfg["data.features"],
                                 separation=cfg["data.separation"])
            train = LabeledDataset(pool.features[:n_train], pool.labels[:n_train])
            test = LabeledDataset(pool.features[n_train:], pool.labels[n_train:])
        else:
            train = synth_dataset(kind, n_train, seed=data_seed,
                                  classes=cfg["data.classes"], p=cfg["data.features"],
                                  separation=cfg["data.separation"])
            test = None
    spec = PartitionSpec(kind=cfg["data.partition"], K=cfg["fed.K"],
                         seed=data_seed + 2, alpha=cfg["data.alpha"])
    return train, test, partition(train, spec)


def _objective_from_config(cfg: dict[str, Any], train: LabeledDataset,
                           trial: int) -> Objective:
    model = cfg["fed.model"]
    if model == "quadratic":
        return build_objective(
            "quadratic", d=cfg["fed.quad_dim"],
            curvature_range=(cfg["fed.quad_curv_min"], cfg["fed.quad_curv_max"]),
            seed=cfg["seed"] * 1_000_003 + trial)
    return build_objective(model, train, hidden=cfg["fed.hidden"],
                           n_classes=cfg["data.classes"])


def run_single_trial(cfg: dict[str, Any], trial: int, aggregator: str
                     ) -> list[RoundTrace]:
    """One (trial, aggregator) FedAvg run from a validated config."""
    train, test, parts = build_experiment_data(cfg, trial)
    objective = _objective_from_config(cfg, train, trial)
    budgets = None
    if cfg["fed.budget"] is not None:
        budgets = np.full(cfg["fed.K"], cfg["fed.budget"])
    run_cfg = FedRunConfig(
        K=cfg["fed.K"], Q=cfg["fed.Q"], T=cfg["fed.T"],
        batch_size=cfg["fed.batch_size"], beta0=cfg["fed.beta0"],
        schedule=cfg["fed.schedule"], clip_G=cfg["fed.clip_G"],
        aggregator=aggregator, phy=_phy_from_config(cfg), budgets=budgets,
        seed=cfg["seed"] * 1_000_003 + trial)
    return run_fedavg(run_cfg, objective, parts, test)
