"""Byzantine strategies: data poisoning, update poisoning and protocol-level
misbehaviour, plus dropout schedules."""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Mapping, Optional

import numpy as np

TRIM = "TrimAttack"
LABEL_FLIP = "LabelFlip"
SCALE = "ScaleUpdate"
RANDOM_SHARES = "RandomShares"
INCONSISTENT_DEAL = "InconsistentDeal"
WRONG_COMPUTATION = "WrongComputation"
SIGN_FLIP = "SignFlip"

DATA_KINDS = {LABEL_FLIP}
UPDATE_KINDS = {TRIM, SCALE, SIGN_FLIP}
PROTOCOL_KINDS = {RANDOM_SHARES, INCONSISTENT_DEAL, WRONG_COMPUTATION}
ALL_KINDS = DATA_KINDS | UPDATE_KINDS | PROTOCOL_KINDS

SHARE_KINDS = frozenset({"DEAL", "SUBSHARE", "LAMBDA_DEAL", "ZERO_CONTRIB", "CHECKPOINT", "RESPONSE",
                         "REVEAL", "SYNDROME", "NORM_SHARE", "RECON"})
FEDERATOR_KINDS = frozenset({"NORM_SHARE", "RECON"})


class Unsupported(ValueError):
    pass


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    members: frozenset
    rounds: Optional[frozenset] = None  # None: every round
    phases: Optional[frozenset] = None  # None: every phase (protocol attacks only)
    factor: float = 2.0
    z_range: tuple[float, float] = (3.0, 4.0)

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        object.__setattr__(self, "members", frozenset(self.members))
        if self.rounds is not None:
            object.__setattr__(self, "rounds", frozenset(self.rounds))
        if self.phases is not None:
            object.__setattr__(self, "phases", frozenset(self.phases))

    def active(self, round_idx: int, phase: Optional[str] = None) -> bool:
        if self.rounds is not None and round_idx not in self.rounds:
            return False
        return phase is None or self.phases is None or phase in self.phases


def check_budget(specs: Iterable[AttackSpec], b: int, dropouts: Iterable[int] = (), p_drop: int = 0):
    attackers = set().union(*[s.members for s in specs]) if specs else set()
    if len(attackers) > b:
        raise BudgetExceeded(f"{len(attackers)} attacking parties exceed b={b}")
    if len(set(dropouts)) > p_drop:
        raise BudgetExceeded(f"{len(set(dropouts))} dropouts exceed p_drop={p_drop}")


def apply_data_attack(spec: AttackSpec, datasets: Mapping[int, tuple], num_classes: Optional[int]) -> dict:
    """LabelFlip: y -> C-1-y for every member's dataset."""
    if spec.kind != LABEL_FLIP:
        return dict(datasets)
    if num_classes is None:
        raise Unsupported("label flipping needs a classification task")
    out = {}
    for i, (X, y) in datasets.items():
        out[i] = (X, num_classes - 1 - np.asarray(y)) if i in spec.members else (X, y)
    return out


def apply_update_attack(spec: AttackSpec, honest_updates, own_update, rng: np.random.Generator) -> np.ndarray:
    own = np.asarray(own_update, dtype=float)
    if spec.kind == SCALE:
        return own * spec.factor
    if spec.kind == SIGN_FLIP:
        return -own
    if spec.kind == TRIM:
        H = np.asarray(honest_updates, dtype=float)
        mu, sd = H.mean(axis=0), H.std(axis=0)
        z = rng.uniform(*spec.z_range, size=mu.shape)
        return mu - z * sd * np.sign(mu)
    return own


def _randomize(values, rng: random.Random, prime: int):
    if isinstance(values, tuple):
        return tuple(_randomize(v, rng, prime) for v in values)
    if isinstance(values, int) and not isinstance(values, bool):
        return rng.randrange(prime)
    return values


def _shift(values, prime: int):
    if isinstance(values, tuple):
        return tuple(_shift(v, prime) for v in values)
    if isinstance(values, int) and not isinstance(values, bool):
        return (values + 1) % prime
    return values


def apply_protocol_attack(spec: AttackSpec, kind: str, values, rng: random.Random, prime: int):
    """Rewrite the value part of one outgoing message."""
    if spec.kind == RANDOM_SHARES and kind in SHARE_KINDS:
        return _randomize(values, rng, prime)
    if spec.kind == WRONG_COMPUTATION and kind in FEDERATOR_KINDS:
        return _shift(values, prime)
    return values


@dataclass
class ProtocolAdversary:
    """Dispatches protocol attacks at send time.  Uses its own RNG stream so
    honest randomness is unaffected by adversary placement."""

    specs: list
    prime: int
    rng: random.Random = dc_field(default_factory=lambda: random.Random(0))

    def tamper(self, sender: int, kind: str, values, round_idx: int, phase: str):
        for spec in self.specs:
            if spec.kind in PROTOCOL_KINDS and sender in spec.members and spec.active(round_idx, phase):
                values = apply_protocol_attack(spec, kind, values, self.rng, self.prime)
        return values

    def inconsistent_dealers(self, round_idx: int, phase: str) -> frozenset:
        out = set()
        for spec in self.specs:
            if spec.kind == INCONSISTENT_DEAL and spec.active(round_idx, phase):
                out |= spec.members
        return frozenset(out)


@dataclass(frozen=True)
class DropSchedule:
    """party -> phase from which it stays silent (within the given rounds)."""

    drops: Mapping[int, str]
    rounds: Optional[frozenset] = None

    def silenced_at(self, round_idx: int, phase: str, order: tuple) -> set:
        if self.rounds is not None and round_idx not in self.rounds:
            return set()
        pos = order.index(phase)
        return {i for i, ph in self.drops.items() if order.index(ph) <= pos}
