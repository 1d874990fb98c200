"""Federated training loop with FedAvg, plaintext FLTrust (exact or polynomial
ReLU) and the secure protocol as interchangeable aggregators."""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, field as dc_field, fields
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from . import adversary as adv
from .data import Dataset, make_dataset
from .models import accuracy, make_model
from .net import derive_seed
from .params import ProtocolParams, setup
from .protocol import LOW_TRUST_RATIO, LowTrustDenominator, ProtocolEngine, norm_passes, plaintext_norms, plaintext_oracle
from .quantizer import QuantConfig, ZeroUpdate, normalize, quantize
from .relu_poly import ReluApprox, relu

AGGREGATORS = ("fedavg", "fltrust-exact", "fltrust-approx", "byitfl-secure")
ATTACKS = {
    "none": None,
    "trim": adv.TRIM,
    "label_flip": adv.LABEL_FLIP,
    "scale": adv.SCALE,
    "sign_flip": adv.SIGN_FLIP,
    "random_shares": adv.RANDOM_SHARES,
    "inconsistent_deal": adv.INCONSISTENT_DEAL,
    "wrong_computation": adv.WRONG_COMPUTATION,
}
CSV_HEADER = ("round", "aggregator", "attack", "loss", "accuracy", "excluded_count")


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class FLConfig:
    n: int = 16
    b: int = 0
    t: int = 1
    p_drop: int = 0
    m: int = 1
    k: int = 6
    q: int = 1024
    epsilon: float = 0.02
    seed: int = 0
    aggregator: str = "fltrust-approx"
    attack: str = "none"
    dataset: str = "blobs"
    rounds: int = 30
    eta: float = 1.0
    eta_u: float = 1.0
    root_size: int = 100
    local_iters: int = 1
    batch_size: int = 1
    model: str = "logreg"
    hidden: int = 16
    dim: int = 5
    classes: int = 2
    samples: int = 4000
    test_size: int = 1000
    separation: float = 4.0
    noise: float = 1.0
    quantized: bool = True
    scale_factor: float = 2.0
    b_max: Optional[int] = None
    images: Optional[str] = None
    labels: Optional[str] = None

    @classmethod
    def from_dict(cls, d: Mapping) -> "FLConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, val in d.items():
            if key not in known:
                raise KeyError(f"unknown config key {key!r}")
            kw[key] = _coerce(known[key].type, val)
        return cls(**kw)


def _coerce(typ, val):
    if not isinstance(val, str):
        return val
    t = str(typ)
    if val.lower() in ("none", "null", "") and "Optional" in t:
        return None
    if "bool" in t:
        return val.lower() in ("1", "true", "yes", "on")
    if "int" in t:
        return int(val)
    if "float" in t:
        return float(val)
    return val


@dataclass
class TrainResult:
    metrics: list
    weights: np.ndarray
    attackers: list
    excluded: set
    skipped: list = dc_field(default_factory=list)
    wall_time: float = 0.0
    records: list = dc_field(default_factory=list)

    @property
    def final_accuracy(self) -> float:
        return self.metrics[-1]["accuracy"]


def local_update(model, w: np.ndarray, X: np.ndarray, y: np.ndarray, eta_u: float, local_iters: int = 1,
                 batch_size: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Run ``local_iters`` gradient steps from ``w``; returns the weight delta w_i - w."""
    wi = w.copy()
    for _ in range(local_iters):
        if batch_size and batch_size < len(y):
            idx = rng.choice(len(y), batch_size, replace=False)
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        loss, grad = model.loss_grad(wi, Xb, yb)
        if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
            raise TrainingDiverged(f"non-finite gradient (loss={loss}, |w|={np.linalg.norm(wi):.3g})")
        wi -= eta_u * grad
    return wi - w


def aggregate_fedavg(updates) -> np.ndarray:
    ups = list(updates.values()) if isinstance(updates, Mapping) else list(updates)
    if not ups:
        raise ValueError("no updates to average")
    return np.mean(np.asarray(ups, dtype=float), axis=0)


def aggregate_fltrust(updates, g0, relu_fn="exact") -> np.ndarray:
    """norm(g0) * sum_i TS_i * unit(g_i) / sum_i TS_i with TS_i = relu_fn(cos(g0, g_i))."""
    g0 = np.asarray(g0, dtype=float)
    n0 = float(np.linalg.norm(g0))
    if n0 == 0.0:
        raise ZeroUpdate("root update is zero")
    u0 = g0 / n0
    ups = list(updates.values()) if isinstance(updates, Mapping) else list(updates)
    units = []
    for g in ups:
        try:
            units.append(normalize(g))
        except ZeroUpdate:
            continue
    f = relu if relu_fn == "exact" else relu_fn
    ts = np.array([float(f(np.dot(u0, u))) for u in units])
    s1 = float(ts.sum())
    if abs(s1) < 1e-3 * max(len(ups), 1):
        raise LowTrustDenominator(f"sum of trust scores {s1:.3g} is near zero")
    return n0 * (ts @ np.asarray(units)) / s1


def quantize_round(updates: Mapping[int, np.ndarray], g0: np.ndarray, cfg: QuantConfig, seed: int, round_idx: int,
                   scaled: frozenset = frozenset(), factor: float = 2.0):
    """Normalize and quantize every update with per-party streams shared by all quantized aggregators."""
    out = {}
    for i, g in updates.items():
        rng = np.random.default_rng(derive_seed(seed, "quant", round_idx, i))
        try:
            gt = normalize(g)
        except ZeroUpdate:
            out[i] = None
            continue
        if i in scaled:
            out[i] = quantize(gt * factor, cfg, rng, i, check_range=False)
        else:
            out[i] = quantize(gt, cfg, rng, i)
    rng0 = np.random.default_rng(derive_seed(seed, "quant", round_idx, 0))
    g0t = normalize(g0)
    return out, quantize(g0t, cfg, rng0, 0), float(np.linalg.norm(g0))


def fltrust_quantized(qups, qg0, norm0: float, approx: ReluApprox, params: ProtocolParams,
                      excluded: set) -> tuple[np.ndarray, list]:
    """Plaintext twin of the secure protocol (same inputs, same norm check, same exclusions)."""
    live = {i: u for i, u in qups.items() if u is not None and i not in excluded}
    norms = plaintext_norms(live)
    failed = {i for i, v in norms.items() if not norm_passes(v, params.q, params.epsilon)}
    excluded |= failed
    included = sorted(i for i in live if i not in failed)
    if not included:
        raise LowTrustDenominator("no users left to aggregate")
    o = plaintext_oracle(live, qg0, approx, params.prime, included)
    fr = np.array([float(f) for f in o.quotients])
    if np.linalg.norm(fr) / params.q > LOW_TRUST_RATIO:
        raise LowTrustDenominator("aggregate quotient is implausibly large; trust denominator near zero")
    return fr * norm0 / params.q, included


def _pick_attackers(cfg: FLConfig) -> list[int]:
    if cfg.b == 0 or ATTACKS.get(cfg.attack) is None:
        return []
    rng = np.random.default_rng(derive_seed(cfg.seed, "attackers"))
    return sorted(int(i) for i in rng.choice(np.arange(1, cfg.n + 1), cfg.b, replace=False))


def train(cfg: FLConfig, out_csv: Optional[str | Path] = None, dataset: Optional[Dataset] = None) -> TrainResult:
    if cfg.aggregator not in AGGREGATORS:
        raise ValueError(f"unknown aggregator {cfg.aggregator!r}")
    if cfg.attack not in ATTACKS:
        raise ValueError(f"unknown attack {cfg.attack!r}")
    t_start = time.perf_counter()
    ds = dataset if dataset is not None else make_dataset(
        cfg.dataset, cfg.n, np.random.default_rng(derive_seed(cfg.seed, "data")), samples=cfg.samples,
        dim=cfg.dim, classes=cfg.classes, root_size=cfg.root_size, test_size=cfg.test_size,
        separation=cfg.separation, noise=cfg.noise, images=cfg.images, labels=cfg.labels)
    model = make_model(cfg.model, ds.features.shape[1], ds.num_classes, cfg.hidden)
    w = model.init(np.random.default_rng(derive_seed(cfg.seed, "init")))
    attackers = _pick_attackers(cfg)
    kind = ATTACKS[cfg.attack]
    spec = adv.AttackSpec(kind, frozenset(attackers), factor=cfg.scale_factor) if attackers else None
    adv.check_budget([spec] if spec else [], cfg.b)

    users = {i: ds.user(i - 1) for i in range(1, cfg.n + 1)}
    if spec is not None and kind == adv.LABEL_FLIP:
        users = adv.apply_data_attack(spec, users, ds.num_classes)
    X0, y0 = ds.root_data()

    params = approx = engine = None
    if cfg.aggregator in ("byitfl-secure",) or (cfg.aggregator == "fltrust-approx"):
        params, approx = setup(cfg.n, cfg.b, cfg.t, cfg.p_drop, cfg.m, cfg.k, cfg.q, model.size,
                               epsilon=cfg.epsilon, b_max=cfg.b_max, eta=cfg.eta, eta_u=cfg.eta_u)
    if cfg.aggregator == "byitfl-secure":
        check = params.check()
        if not check:
            raise ValueError("; ".join(check.reasons))
        pattacks = [spec] if spec is not None and kind in adv.PROTOCOL_KINDS else []
        engine = ProtocolEngine(params, approx, seed=derive_seed(cfg.seed, "protocol") % 2**63,
                                attacks=pattacks, record=False)
    excluded: set[int] = set()
    metrics, skipped, records = [], [], []
    atk_rng = np.random.default_rng(derive_seed(cfg.seed, "attack-values"))
    scaled = frozenset(attackers) if kind == adv.SCALE else frozenset()

    for r in range(cfg.rounds):
        ups = {}
        for i, (X, y) in users.items():
            rng = np.random.default_rng(derive_seed(cfg.seed, "sgd", r, i))
            ups[i] = local_update(model, w, X, y, cfg.eta_u, cfg.local_iters, cfg.batch_size, rng)
        g0 = local_update(model, w, X0, y0, cfg.eta_u, cfg.local_iters, cfg.batch_size,
                          np.random.default_rng(derive_seed(cfg.seed, "sgd", r, 0)))
        if spec is not None and kind in (adv.TRIM, adv.SIGN_FLIP):
            honest = [ups[i] for i in ups if i not in spec.members]
            for i in attackers:
                ups[i] = adv.apply_update_attack(spec, honest, ups[i], atk_rng)
        try:
            if cfg.aggregator == "fedavg":
                agg = {i: (u * cfg.scale_factor if i in scaled else u) for i, u in ups.items()}
                g = aggregate_fedavg(agg)
            elif cfg.aggregator == "fltrust-exact":
                g = aggregate_fltrust(ups, g0, "exact")
            elif cfg.aggregator == "fltrust-approx" and not cfg.quantized:
                g = aggregate_fltrust(ups, g0, approx)
            else:
                qups, qg0, norm0 = quantize_round(ups, g0, params.quant, cfg.seed, r, scaled, cfg.scale_factor)
                if cfg.aggregator == "fltrust-approx":
                    g, _ = fltrust_quantized(qups, qg0, norm0, approx, params, excluded)
                else:
                    res = engine.run_round(qups, qg0, norm0, round_idx=r)
                    excluded = set(engine.excluded)
                    records.append(res.to_record())
                    g = res.check().g
        except (LowTrustDenominator, ZeroUpdate):
            skipped.append(r)
            g = np.zeros_like(w)
        # g is a weight delta (w_i - w), so the global step adds it
        w = w + cfg.eta * g
        Xt, yt = ds.test_features, ds.test_labels
        loss = model.loss_grad(w, Xt, yt)[0]
        metrics.append({"round": r, "aggregator": cfg.aggregator, "attack": cfg.attack, "loss": loss,
                        "accuracy": accuracy(model, w, Xt, yt), "excluded_count": len(excluded)})
    result = TrainResult(metrics, w, attackers, excluded, skipped, time.perf_counter() - t_start, records)
    if out_csv is not None:
        write_metrics(metrics, out_csv)
    return result


def write_metrics(metrics, path: str | Path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_HEADER)
        for row in metrics:
            wr.writerow([row["round"], row["aggregator"], row["attack"], f"{row['loss']:.10f}",
                         f"{row['accuracy']:.6f}", row["excluded_count"]])


def config_dict(cfg: FLConfig) -> dict:
    return asdict(cfg)
