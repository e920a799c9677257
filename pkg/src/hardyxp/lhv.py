r"""Instruction-set (local hidden variable) models.

A source that cannot know which measurement each detector will perform must
emit, per pair, a message fixing all four possible answers: an instruction
set (a_x1, a_x2; a_p1, a_p2) with each entry +1 or -1.  A local model is a
probability distribution over the 16 instruction sets.  Every joint
quadrant probability is then a sum of four message weights, e.g.

    P_pp(-,-) = P(+,+;-,-) + P(+,-;-,-) + P(-,+;-,-) + P(-,-;-,-),

and each of those weights is individually bounded by a joint probability
the instruction set also serves:

    P(+,+;-,-) <= P_xx(+,+)
    P(+,-;-,-) <= P_px(-,-)
    P(-,+;-,-) <= P_xp(-,-)
    P(-,-;-,-) <= min{P_xp(-,-), P_px(-,-)}

Summing gives the witness bound W <= 0 for every distribution.  The joint
probabilities are linear in the weights, but W itself is only piecewise
affine (the min term makes it convex), so its maximum over the probability
simplex sits on a vertex; enumerating the 16 point masses is an exact
maximization and yields max W = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np
from numpy.random import Generator, Philox

from .probabilities import HardyWitness

__all__ = [
    "InstructionSet",
    "ALL_INSTRUCTION_SETS",
    "MessageDistribution",
    "joint_from_messages",
    "verify_message_bounds",
    "verify_hardy_bound",
    "lhv_max_witness",
    "random_message_distributions",
    "batch_joint_probabilities",
    "batch_witness_and_slacks",
]

Sign = int  # +1 or -1


@dataclass(frozen=True, order=True)
class InstructionSet:
    """One message (a_x1, a_x2; a_p1, a_p2), entries +1/-1."""

    a_x1: Sign
    a_x2: Sign
    a_p1: Sign
    a_p2: Sign

    def __post_init__(self):
        for v in (self.a_x1, self.a_x2, self.a_p1, self.a_p2):
            if v not in (+1, -1):
                raise ValueError("instruction entries must be +1 or -1")

    def answer(self, particle: int, setting: str) -> Sign:
        """Predetermined sign reported when ``particle`` measures ``setting``."""
        if setting == "x":
            return self.a_x1 if particle == 1 else self.a_x2
        return self.a_p1 if particle == 1 else self.a_p2

    @property
    def label(self) -> str:
        c = lambda s: "+" if s > 0 else "-"
        return f"{c(self.a_x1)}{c(self.a_x2)};{c(self.a_p1)}{c(self.a_p2)}"

    @classmethod
    def from_label(cls, label: str) -> "InstructionSet":
        xs, ps = label.split(";")
        conv = lambda ch: +1 if ch == "+" else -1
        return cls(conv(xs[0]), conv(xs[1]), conv(ps[0]), conv(ps[1]))


ALL_INSTRUCTION_SETS = tuple(
    InstructionSet(*signs) for signs in product((+1, -1), repeat=4))

_INDEX = {iset: i for i, iset in enumerate(ALL_INSTRUCTION_SETS)}


def _match_matrix(setting: str, s1: Sign, s2: Sign) -> np.ndarray:
    """Indicator over the 16 messages contributing to P_setting(s1, s2)."""
    b1, b2 = setting[0], setting[1]
    return np.array([1.0 if (m.answer(1, b1) == s1 and m.answer(2, b2) == s2)
                     else 0.0 for m in ALL_INSTRUCTION_SETS])


# precomputed indicators for the sixteen joints
_JOINT_ROWS = {(setting, s1, s2): _match_matrix(setting, s1, s2)
               for setting in ("xx", "xp", "px", "pp")
               for s1 in (+1, -1) for s2 in (+1, -1)}


@dataclass(frozen=True)
class MessageDistribution:
    """Probability weights over the 16 instruction sets.

    The weights vector is aligned with :data:`ALL_INSTRUCTION_SETS`.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (16,):
            raise ValueError("weights must have shape (16,)")
        if np.any(w < -1e-15):
            raise ValueError("weights must be non-negative")
        if abs(float(np.sum(w)) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "weights", w)

    def weight(self, iset: InstructionSet) -> float:
        return float(self.weights[_INDEX[iset]])

    @classmethod
    def uniform(cls) -> "MessageDistribution":
        return cls(np.full(16, 1.0 / 16.0))

    @classmethod
    def point_mass(cls, iset: InstructionSet) -> "MessageDistribution":
        w = np.zeros(16)
        w[_INDEX[iset]] = 1.0
        return cls(w)

    @classmethod
    def from_dict(cls, d: dict) -> "MessageDistribution":
        w = np.zeros(16)
        for label, v in d.items():
            w[_INDEX[InstructionSet.from_label(label)]] = float(v)
        return cls(w)

    def to_dict(self) -> dict:
        return {m.label: float(self.weights[i])
                for i, m in enumerate(ALL_INSTRUCTION_SETS)}

    @classmethod
    def from_json(cls, text: str) -> "MessageDistribution":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def joint_from_messages(dist: MessageDistribution, setting: str,
                        s1: Sign, s2: Sign) -> float:
    """P_setting(s1, s2) of the local model: the sum of 4 matching weights."""
    row = _JOINT_ROWS[(setting, s1, s2)]
    return float(row @ dist.weights)


def lhv_probability_table(dist: MessageDistribution) -> dict:
    """All sixteen joints of the local model, keyed like the quantum table."""
    return {key: float(row @ dist.weights) for key, row in _JOINT_ROWS.items()}


def verify_message_bounds(dist: MessageDistribution) -> dict:
    """Slack of each message bound (all must be >= 0 for any distribution)."""
    w = dist.weights
    get = lambda lab: float(w[_INDEX[InstructionSet.from_label(lab)]])
    slacks = {
        "p_xx_pp_minus_w_ppmm": joint_from_messages(dist, "xx", +1, +1) - get("++;--"),
        "p_px_mm_minus_w_pmmm": joint_from_messages(dist, "px", -1, -1) - get("+-;--"),
        "p_xp_mm_minus_w_mpmm": joint_from_messages(dist, "xp", -1, -1) - get("-+;--"),
        "min_term_minus_w_mmmm": min(joint_from_messages(dist, "xp", -1, -1),
                                     joint_from_messages(dist, "px", -1, -1))
                                 - get("--;--"),
    }
    return slacks


def verify_hardy_bound(dist: MessageDistribution) -> HardyWitness:
    """Witness of the local model's joint table (always <= 0)."""
    return HardyWitness(
        lhs=joint_from_messages(dist, "pp", -1, -1),
        p_xx_pp=joint_from_messages(dist, "xx", +1, +1),
        p_px_mm=joint_from_messages(dist, "px", -1, -1),
        p_xp_mm=joint_from_messages(dist, "xp", -1, -1),
    )


def lhv_max_witness(return_vertices: bool = False):
    """Exact maximum of W over all message distributions.

    W is convex in the weights (affine terms plus a max of two affine
    functions), so the maximum over the 15-simplex is attained at a vertex;
    all 16 vertices are enumerated.  The maximum is exactly 0.

    Returns
    -------
    float, or (float, list of InstructionSet)
        The maximum, optionally with the achieving vertices.
    """
    best = -np.inf
    achieving = []
    for iset in ALL_INSTRUCTION_SETS:
        w = verify_hardy_bound(MessageDistribution.point_mass(iset)).w
        if w > best + 1e-15:
            best, achieving = w, [iset]
        elif abs(w - best) <= 1e-15:
            achieving.append(iset)
    return (best, achieving) if return_vertices else best


# ---------------------------------------------------------------------------
# Batched property checks (seeded, vectorized)
# ---------------------------------------------------------------------------

def random_message_distributions(count: int, seed: int) -> np.ndarray:
    """(count, 16) weight matrix: uniform draws normalized to sum 1.

    Distribution k consumes Philox counter blocks 4k..4k+3 of the keyed
    stream, so any subset is reproducible independently of batch size.
    """
    u = Generator(Philox(key=seed)).random((count, 16))
    return u / u.sum(axis=1, keepdims=True)


_ROWS_PPMM = _JOINT_ROWS[("pp", -1, -1)]
_ROWS_XXPP = _JOINT_ROWS[("xx", +1, +1)]
_ROWS_PXMM = _JOINT_ROWS[("px", -1, -1)]
_ROWS_XPMM = _JOINT_ROWS[("xp", -1, -1)]


def batch_joint_probabilities(weights: np.ndarray) -> dict:
    """The four witness-relevant joints for a (n, 16) weight matrix."""
    return {
        "p_pp_mm": weights @ _ROWS_PPMM,
        "p_xx_pp": weights @ _ROWS_XXPP,
        "p_px_mm": weights @ _ROWS_PXMM,
        "p_xp_mm": weights @ _ROWS_XPMM,
    }


def batch_witness_and_slacks(weights: np.ndarray):
    """Vectorized witness values and message-bound slacks.

    Parameters
    ----------
    weights : (n, 16) ndarray
        Rows are message distributions (need not be re-validated here).

    Returns
    -------
    (ndarray, ndarray)
        Witness values (n,) and slack matrix (n, 4).
    """
    j = batch_joint_probabilities(weights)
    min_term = np.minimum(j["p_xp_mm"], j["p_px_mm"])
    wit = j["p_pp_mm"] - (j["p_xx_pp"] + j["p_px_mm"] + j["p_xp_mm"] + min_term)
    idx = lambda lab: _INDEX[InstructionSet.from_label(lab)]
    slacks = np.stack([
        j["p_xx_pp"] - weights[:, idx("++;--")],
        j["p_px_mm"] - weights[:, idx("+-;--")],
        j["p_xp_mm"] - weights[:, idx("-+;--")],
        min_term - weights[:, idx("--;--")],
    ], axis=1)
    return wit, slacks
