"""Stochastic error models: depolarizing gate noise and measurement flips.

Three probabilities parameterize a model: p2 after every CNOT (two-qubit
depolarizing, 15 non-identity Pauli pairs equally likely), pI after every
identity gate (single-qubit depolarizing), and pM for a measurement that
reports and projects into the wrong eigenstate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRESET_NAMES = ("standard", "balanced", "iontrap")


@dataclass(frozen=True)
class PauliOp:
    """Single-qubit Pauli as X/Z bits: I=(0,0), X=(1,0), Z=(0,1), Y=(1,1)."""

    x: int
    z: int

    def __mul__(self, other: "PauliOp") -> "PauliOp":
        return PauliOp(self.x ^ other.x, self.z ^ other.z)

    def name(self) -> str:
        return {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}[(self.x, self.z)]


I = PauliOp(0, 0)
X = PauliOp(1, 0)
Z = PauliOp(0, 1)
Y = PauliOp(1, 1)

SINGLE_PAULIS = (X, Y, Z)

# The 15 non-identity two-qubit Paulis, in a fixed order so that sampled
# indices are reproducible.
TWO_QUBIT_PAULIS = tuple(
    (a, b) for a in (I, X, Y, Z) for b in (I, X, Y, Z) if (a, b) != (I, I)
)


@dataclass(frozen=True)
class ErrorModel:
    p2: float
    pI: float
    pM: float

    def __post_init__(self):
        for name, p in (("p2", self.p2), ("pI", self.pI), ("pM", self.pM)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")


def preset(name: str, p: float) -> ErrorModel:
    """Named error models.

    standard: p2 = pI = pM = p.
    balanced: pI = 4*p2/5 and pM = 2*pI/3, so an idle qubit fails like one
        qubit of a two-qubit gate and measurement only sees one basis.
    iontrap:  pI = p2/1000, pM = p2/100.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if name == "standard":
        return ErrorModel(p, p, p)
    if name == "balanced":
        return ErrorModel(p, 4 * p / 5, 8 * p / 15)
    if name == "iontrap":
        return ErrorModel(p, p / 1000, p / 100)
    raise ValueError(f"unknown error model {name!r}; choose from {PRESET_NAMES}")


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one trial.

    Streams are derived counter-style from (master_seed, trial_index), so a
    sweep gives identical results no matter how trials are scheduled.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    return np.random.Generator(np.random.Philox(seq))


def sample_two_qubit_error(model: ErrorModel, rng: np.random.Generator) -> tuple[PauliOp, PauliOp]:
    """II with probability 1-p2, otherwise uniform over the 15 pairs."""
    if rng.random() >= model.p2:
        return (I, I)
    return TWO_QUBIT_PAULIS[rng.integers(15)]


def sample_single_qubit_error(model: ErrorModel, rng: np.random.Generator) -> PauliOp:
    """I with probability 1-pI, otherwise uniform over X, Y, Z."""
    if rng.random() >= model.pI:
        return I
    return SINGLE_PAULIS[rng.integers(3)]


def sample_measurement_flip(model: ErrorModel, rng: np.random.Generator) -> int:
    """1 with probability pM."""
    return int(rng.random() < model.pM)
