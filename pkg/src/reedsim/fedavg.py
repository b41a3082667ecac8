"""Full-participation FedAvg over pluggable aggregators.

Each round: broadcast the global model, run Q local minibatch SGD steps on
every client, form increments, aggregate (ideal mean, noncoherent
paired-energy, or coherent channel-inversion reference), apply the server
update and record a trace.  All randomness flows through per-(round,
client) stream keys, so runs are reproducible and the aggregator choice
never perturbs data order or model initialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimator import (ReedPhyConfig, aggregate_coherent_csit, aggregate_ideal,
                        aggregate_reed)
from .datasets import LabeledDataset
from .moments import energy_audit, eta_schedule
from .streams import StreamKey

__all__ = [
    "Objective",
    "QuadraticObjective",
    "LogisticObjective",
    "MlpObjective",
    "build_objective",
    "FedRunConfig",
    "RoundTrace",
    "local_round",
    "run_fedavg",
]

# stream-path domains under the run seed
_DOM_INIT, _DOM_LOCAL, _DOM_CHANNEL = 0, 1, 2


class Objective:
    """Differentiable empirical risk with exact analytic gradients.

    Subclasses bind the training data; batches are index arrays into it.
    """

    dim: int

    def loss(self, params: np.ndarray, batch: np.ndarray) -> float:
        raise NotImplementedError

    def stochastic_gradient(self, params: np.ndarray, batch: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def full_gradient(self, params: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def init_params(self, key: StreamKey) -> np.ndarray:
        raise NotImplementedError

    def accuracy(self, params: np.ndarray, features: np.ndarray,
                 labels: np.ndarray) -> float:
        """Classification accuracy; 0.0 for objectives without classes."""
        return 0.0

    # ``grad_norm_is_proxy`` marks objectives whose diagnostic gradient is
    # subsampled rather than exact.
    grad_norm_is_proxy: bool = False


class QuadraticObjective(Objective):
    """f(w) = 1/2 sum_i lambda_i w_i^2, independent of the data rows."""

    def __init__(self, curvatures: np.ndarray):
        self.curvatures = np.asarray(curvatures, dtype=float)
        if np.any(self.curvatures <= 0):
            raise ValueError("curvatures must be > 0")
        self.dim = self.curvatures.size

    def loss(self, params, batch=None):
        return 0.5 * float(self.curvatures @ params**2)

    def stochastic_gradient(self, params, batch=None):
        return self.curvatures * params

    def full_gradient(self, params):
        return self.curvatures * params

    def init_params(self, key):
        return np.ones(self.dim)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class LogisticObjective(Objective):
    """Multinomial logistic regression with bias, mean cross-entropy."""

    def __init__(self, data: LabeledDataset, n_classes: int):
        if n_classes < 2:
            raise ValueError("need at least 2 classes")
        if len(data) and data.labels.max() >= n_classes:
            raise ValueError("labels exceed the declared class count")
        self.data = data
        self.n_classes = n_classes
        self.n_features = data.features.shape[1]
        self.dim = (self.n_features + 1) * n_classes

    def _unpack(self, params):
        W = params[: self.n_features * self.n_classes].reshape(
            self.n_features, self.n_classes)
        b = params[self.n_features * self.n_classes:]
        return W, b

    def _probs(self, params, X):
        W, b = self._unpack(params)
        return _softmax(X @ W + b)

    def loss(self, params, batch):
        X = self.data.features[batch]
        y = self.data.labels[batch]
        P = self._probs(params, X)
        return float(-np.mean(np.log(P[np.arange(len(y)), y] + 1e-300)))

    def stochastic_gradient(self, params, batch):
        X = self.data.features[batch]
        y = self.data.labels[batch]
        P = self._probs(params, X)
        P[np.arange(len(y)), y] -= 1.0
        P /= len(y)
        gW = X.T @ P
        gb = P.sum(axis=0)
        return np.concatenate([gW.ravel(), gb])

    def full_gradient(self, params):
        return self.stochastic_gradient(params, np.arange(len(self.data)))

    def init_params(self, key):
        return np.zeros(self.dim)

    def accuracy(self, params, features, labels):
        P = self._probs(params, features)
        return float(np.mean(P.argmax(axis=1) == labels))


class MlpObjective(Objective):
    """One-hidden-layer tanh perceptron with softmax cross-entropy."""

    grad_norm_is_proxy = True
    proxy_samples = 512

    def __init__(self, data: LabeledDataset, hidden: int, n_classes: int):
        if hidden < 1 or n_classes < 2:
            raise ValueError("need hidden >= 1 and classes >= 2")
        self.data = data
        self.hidden = hidden
        self.n_classes = n_classes
        self.n_features = data.features.shape[1]
        p, H, C = self.n_features, hidden, n_classes
        self.dim = p * H + H + H * C + C
        self._shapes = [(p, H), (H,), (H, C), (C,)]

    def _unpack(self, params):
        out, start = [], 0
        for shape in self._shapes:
            size = int(np.prod(shape))
            out.append(params[start:start + size].reshape(shape))
            start += size
        return out

    def _forward(self, params, X):
        W1, b1, W2, b2 = self._unpack(params)
        A = np.tanh(X @ W1 + b1)
        return A, _softmax(A @ W2 + b2)

    def loss(self, params, batch):
        X = self.data.features[batch]
        y = self.data.labels[batch]
        _, P = self._forward(params, X)
        return float(-np.mean(np.log(P[np.arange(len(y)), y] + 1e-300)))

    def stochastic_gradient(self, params, batch):
        X = self.data.features[batch]
        y = self.data.labels[batch]
        W1, b1, W2, b2 = self._unpack(params)
        A = np.tanh(X @ W1 + b1)
        P = _softmax(A @ W2 + b2)
        P[np.arange(len(y)), y] -= 1.0
        P /= len(y)
        gW2 = A.T @ P
        gb2 = P.sum(axis=0)
        dA = (P @ W2.T) * (1.0 - A**2)
        gW1 = X.T @ dA
        gb1 = dA.sum(axis=0)
        return np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])

    def full_gradient(self, params):
        return self.stochastic_gradient(params, np.arange(len(self.data)))

    def diagnostic_gradient(self, params, key: StreamKey):
        n = len(self.data)
        if n <= self.proxy_samples:
            return self.full_gradient(params)
        idx = key.generator().choice(n, size=self.proxy_samples, replace=False)
        return self.stochastic_gradient(params, idx)

    def init_params(self, key):
        rng = key.generator()
        return 0.05 * rng.standard_normal(self.dim)

    def accuracy(self, params, features, labels):
        W1, b1, W2, b2 = self._unpack(params)
        A = np.tanh(features @ W1 + b1)
        pred = (A @ W2 + b2).argmax(axis=1)
        return float(np.mean(pred == labels))


def build_objective(kind: str, data: LabeledDataset | None = None, *, d: int = 0,
                    curvature_range: tuple[float, float] = (1.0, 1.0),
                    seed: int = 0, hidden: int = 16,
                    n_classes: int | None = None) -> Objective:
    """Construct one of the supported objective families."""
    if kind == "quadratic":
        if d < 1:
            raise ValueError("quadratic objective needs d >= 1")
        lo, hi = curvature_range
        if lo <= 0 or hi < lo:
            raise ValueError("invalid curvature range")
        rng = StreamKey(seed).generator()
        return QuadraticObjective(rng.uniform(lo, hi, size=d))
    if data is None:
        raise ValueError(f"objective kind {kind!r} needs a dataset")
    classes = n_classes if n_classes is not None else data.n_classes
    if kind == "logistic":
        return LogisticObjective(data, classes)
    if kind == "mlp":
        return MlpObjective(data, hidden, classes)
    raise ValueError(f"unknown objective kind {kind!r}")


@dataclass(frozen=True)
class FedRunConfig:
    """One FedAvg run: protocol sizes, stepsizes, aggregator and radio."""

    K: int
    Q: int
    T: int
    batch_size: int
    beta0: float
    schedule: str = "constant"  # "constant" | "inv_sqrt"
    clip_G: float | None = None
    aggregator: str = "ideal"  # "ideal" | "reed" | "coherent_csit"
    phy: ReedPhyConfig = field(default_factory=ReedPhyConfig)
    budgets: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.K, self.Q, self.T, self.batch_size) < 1:
            raise ValueError("K, Q, T and batch_size must be positive")
        if self.beta0 <= 0:
            raise ValueError("beta0 must be > 0")
        if self.schedule not in ("constant", "inv_sqrt"):
            raise ValueError(f"unknown stepsize schedule {self.schedule!r}")
        if self.aggregator not in ("ideal", "reed", "coherent_csit"):
            raise ValueError(f"unknown aggregator {self.aggregator!r}")
        if self.budgets is not None:
            object.__setattr__(self, "budgets", np.asarray(self.budgets, dtype=float))
            if np.any(self.budgets <= 0):
                raise ValueError("energy budgets must be > 0")
            if self.clip_G is None:
                raise ValueError("energy budgets require clip_G (bounded updates)")
        if self.clip_G is not None and self.clip_G <= 0:
            raise ValueError("clip_G must be > 0")

    def stepsize(self, t: int) -> float:
        if self.schedule == "constant":
            return self.beta0
        return self.beta0 / np.sqrt(1.0 + t)


@dataclass(frozen=True)
class RoundTrace:
    """Per-round record of one FedAvg run."""

    round: int
    train_loss: float
    test_accuracy: float
    grad_norm_sq: float
    grad_norm_is_proxy: bool
    eps_norm_sq: float
    max_client_energy: float
    eta: float
    beta: float


def clip_gradient(g: np.ndarray, clip_G: float | None) -> np.ndarray:
    if clip_G is None:
        return g
    norm = float(np.linalg.norm(g))
    if norm > clip_G:
        return g * (clip_G / norm)
    return g


def local_round(params: np.ndarray, objective: Objective, client_indices: np.ndarray,
                Q: int, beta: float, batch_size: int, key: StreamKey,
                clip_G: float | None = None) -> np.ndarray:
    """Q local minibatch SGD steps; returns the increment w_Q - w_0.

    Minibatches are taken without replacement from a per-round shuffle,
    reshuffling whenever the client's data is exhausted.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    idx = np.asarray(client_indices)
    if idx.size == 0:
        raise ValueError("client dataset is empty")
    rng = key.generator()
    w = params.copy()
    order = rng.permutation(idx)
    pos = 0
    for _ in range(Q):
        if pos >= order.size:
            order = rng.permutation(idx)
            pos = 0
        batch = order[pos:pos + batch_size]
        pos += batch_size
        g = clip_gradient(objective.stochastic_gradient(w, batch), clip_G)
        w = w - beta * g
    return w - params


def _diagnostic_grad(objective: Objective, w: np.ndarray, key: StreamKey) -> np.ndarray:
    if isinstance(objective, MlpObjective):
        return objective.diagnostic_gradient(w, key)
    return objective.full_gradient(w)


def run_fedavg(cfg: FedRunConfig, objective: Objective,
               partitions: list[np.ndarray],
               test_data: LabeledDataset | None = None) -> list[RoundTrace]:
    """Run T rounds of full-participation FedAvg and return the trace.

    With aggregator="reed" and budgets set, the aggregation gain is
    rescheduled every round from the round's stepsize.
    """
    if len(partitions) != cfg.K:
        raise ValueError(f"need {cfg.K} partitions, got {len(partitions)}")
    root = StreamKey(cfg.seed)
    w = objective.init_params(root.child(_DOM_INIT))
    d = objective.dim
    full_train = np.arange(len(objective.data)) if hasattr(objective, "data") else None
    traces: list[RoundTrace] = []

    for t in range(cfg.T):
        beta = cfg.stepsize(t)
        grad = _diagnostic_grad(objective, w, root.child(_DOM_LOCAL, t, cfg.K))
        grad_norm_sq = float(grad @ grad)

        increments = np.empty((cfg.K, d))
        for k in range(cfg.K):
            increments[k] = local_round(
                w, objective, partitions[k], cfg.Q, beta, cfg.batch_size,
                root.child(_DOM_LOCAL, t, k), cfg.clip_G)

        phy = cfg.phy
        if cfg.aggregator == "reed" and cfg.budgets is not None:
            eta_t = eta_schedule(cfg.budgets, cfg.K, d, phy.mean_powers,
                                 phy.weight_sum, beta, cfg.Q, cfg.clip_G)
            phy = ReedPhyConfig(
                eta=eta_t, noise_var=phy.noise_var, mean_powers=phy.mean_powers,
                chip_weights=phy.chip_weights, antennas=phy.antennas,
                kappa=phy.kappa, ideal_channel=phy.ideal_channel)

        ideal = aggregate_ideal(increments, d)
        if cfg.aggregator == "ideal":
            update, eps_norm_sq = ideal, 0.0
            max_energy = 0.0
        elif cfg.aggregator == "reed":
            update = aggregate_reed(increments, phy, root.child(_DOM_CHANNEL, t))
            eps = update - ideal
            eps_norm_sq = float(eps @ eps)
            max_energy = float(energy_audit(increments, phy, cfg.K).max())
        else:
            update = aggregate_coherent_csit(increments, phy.eta, phy.noise_var,
                                             root.child(_DOM_CHANNEL, t))
            eps = update - ideal
            eps_norm_sq = float(eps @ eps)
            max_energy = 0.0

        w = w + update
        if not np.all(np.isfinite(w)):
            raise RuntimeError(f"non-finite model after round {t}")

        train_loss = objective.loss(w, full_train) if full_train is not None \
            else objective.loss(w, None)
        if not np.isfinite(train_loss):
            raise RuntimeError(f"non-finite train loss after round {t}")
        test_acc = (objective.accuracy(w, test_data.features, test_data.labels)
                    if test_data is not None else 0.0)
        traces.append(RoundTrace(
            round=t, train_loss=train_loss, test_accuracy=test_acc,
            grad_norm_sq=grad_norm_sq,
            grad_norm_is_proxy=objective.grad_norm_is_proxy,
            eps_norm_sq=eps_norm_sq, max_client_energy=max_energy,
            eta=phy.eta, beta=beta))
    return traces
