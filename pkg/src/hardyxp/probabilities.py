r"""Joint quadrant probabilities and the local-realism witness.

For each pair of detector settings (position or momentum on each side) the
outcome plane splits into four sign quadrants; this module computes the
probability of every quadrant, checks the three zero conditions

    P_xx(+,+) = P_px(-,-) = P_xp(-,-) = 0,

and evaluates the witness

    W = P_pp(-,-) - [P_xx(+,+) + P_px(-,-) + P_xp(-,-)
                     + min(P_xp(-,-), P_px(-,-))],

which any instruction-set (local hidden variable) model keeps <= 0 while
the masked exponential state reaches W = 1/48.

Two computation paths exist.  The closed-form path applies to factorized
profiles and reduces every entry to two scalars: the position quadrant
mass q = \int_0^\infty |f|^2 dx and the negative-momentum half-line mass
m = \int_{-inf}^0 |psi_p|^2 dp.  The reduction uses only exact support and
Parseval identities of the construction:

    \int_R |h|^2 dp = q,     \int_0^\infty g \bar h dp = q,

where h is the half-line transform of f (so the positive-half mass is
q - m), giving the table

    xx: 0, N^2 q(1-q), N^2 q(1-q), N^2 (1-q)^2
    px: 0 at (-,-); N^2 (1-q) at (+,-); N^2 m q at (-,+);
        N^2 (1-q-m) q at (+,+)              [xp mirrored]
    pp: N^2 m^2 at (-,-); N^2 (q-m) m mixed; N^2 (1-2q^2+(q-m)^2) at (+,+)

with N^2 = 1/(1-q^2).  Each setting's four entries sum to exactly
N^2 (1-q^2) = 1.  The grid path integrates |psi|^2 of the discretely
transformed state and is an independent cross-check at the few-1e-4 level.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import transforms
from .numerics import QuadratureSpec, integrate_adaptive
from .state import (
    GridSpec,
    MomentumProfile,
    TwoParticleState,
    build_state,
    negative_momentum_mass,
    position_profile,
    positive_quadrant_mass,
    psi_p_closed_form,
)

__all__ = [
    "SETTING_PAIRS",
    "SIGNS",
    "QuadrantProbabilityTable",
    "HardyWitness",
    "ZeroConditionsReport",
    "quadrant_probability",
    "probability_table",
    "hardy_probability_factorized",
    "zero_conditions_report",
    "hardy_witness",
    "table_to_json",
    "table_to_csv",
    "table_from_json",
]

SETTING_PAIRS = ("xx", "xp", "px", "pp")
SIGNS = (+1, -1)

TABLE_SCHEMA_VERSION = 1


def _sign_char(s: int) -> str:
    return "+" if s > 0 else "-"


@dataclass(frozen=True)
class QuadrantProbabilityTable:
    """All sixteen joint quadrant probabilities with error budgets.

    ``entries`` maps (setting, sign1, sign2) with signs in {+1, -1} to the
    probability; ``errors`` holds a numeric error budget per entry.  The
    budget of the closed-form path propagates the quadrature error
    estimates of q and m; the grid path combines its unitarity deficit,
    truncation estimate and self-convergence against a half-resolution run.
    """

    entries: dict
    errors: dict
    method: str
    scale: float | None = None

    @property
    def error_budget(self) -> float:
        return max(self.errors.values())

    def value(self, setting: str, s1: int, s2: int) -> float:
        return self.entries[(setting, s1, s2)]

    def setting_sum(self, setting: str) -> float:
        return math.fsum(self.entries[(setting, s1, s2)]
                         for s1 in SIGNS for s2 in SIGNS)

    def validate(self):
        for key, v in self.entries.items():
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ValueError(f"entry {key} = {v} outside [0, 1]")
        for setting in SETTING_PAIRS:
            s = self.setting_sum(setting)
            budget = 4 * max(self.errors[(setting, s1, s2)]
                             for s1 in SIGNS for s2 in SIGNS) + 1e-12
            if abs(s - 1.0) > budget:
                raise ValueError(f"setting {setting} sums to {s}, "
                                 f"off by more than budget {budget:.2e}")


@dataclass(frozen=True)
class HardyWitness:
    """The violation amount W = lhs - sum(rhs components)."""

    lhs: float                  # P_pp(-,-)
    p_xx_pp: float              # P_xx(+,+)
    p_px_mm: float              # P_px(-,-)
    p_xp_mm: float              # P_xp(-,-)

    @property
    def min_term(self) -> float:
        return min(self.p_xp_mm, self.p_px_mm)

    @property
    def rhs(self) -> float:
        return self.p_xx_pp + self.p_px_mm + self.p_xp_mm + self.min_term

    @property
    def w(self) -> float:
        return self.lhs - self.rhs

    @property
    def violates_local_realism(self) -> bool:
        return self.w > 0

    def to_dict(self):
        return {"lhs_p_pp_mm": self.lhs, "p_xx_pp": self.p_xx_pp,
                "p_px_mm": self.p_px_mm, "p_xp_mm": self.p_xp_mm,
                "min_term": self.min_term, "witness": self.w}


def hardy_witness(table: QuadrantProbabilityTable | dict) -> HardyWitness:
    """Witness from a probability table (or a bare entries mapping).

    Raises
    ------
    KeyError
        If any of the four needed entries is missing.
    """
    entries = table.entries if isinstance(table, QuadrantProbabilityTable) else table
    return HardyWitness(
        lhs=entries[("pp", -1, -1)],
        p_xx_pp=entries[("xx", +1, +1)],
        p_px_mm=entries[("px", -1, -1)],
        p_xp_mm=entries[("xp", -1, -1)],
    )


# ---------------------------------------------------------------------------
# Closed-form path
# ---------------------------------------------------------------------------

def _closed_form_scalars(state: TwoParticleState):
    spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12, max_subdivisions=4000)
    q = state.quadrant_mass
    if q is None:
        q = positive_quadrant_mass(state.profile, state.position, spec)
    m = negative_momentum_mass(spec)
    eps = 2e-11  # conservative cap on the two quadrature error estimates
    return q, m, eps


def _closed_form_table(state: TwoParticleState) -> QuadrantProbabilityTable:
    q, m, eps = _closed_form_scalars(state)
    ent = {}
    if state.masked:
        n2 = 1.0 / (1.0 - q * q)
        mp = q - m  # positive-half mass of |h|^2 (Parseval)
        # position-position: masked product of quadrant masses
        ent[("xx", +1, +1)] = 0.0
        ent[("xx", +1, -1)] = n2 * q * (1 - q)
        ent[("xx", -1, +1)] = n2 * (1 - q) * q
        ent[("xx", -1, -1)] = n2 * (1 - q) ** 2
        # momentum-position: the support of g kills (-,-) exactly
        ent[("px", -1, -1)] = 0.0
        ent[("px", +1, -1)] = n2 * 1.0 * (1 - q)
        ent[("px", -1, +1)] = n2 * m * q
        ent[("px", +1, +1)] = n2 * (1 - q - m) * q
        # position-momentum mirror
        ent[("xp", -1, -1)] = 0.0
        ent[("xp", -1, +1)] = n2 * (1 - q) * 1.0
        ent[("xp", +1, -1)] = n2 * q * m
        ent[("xp", +1, +1)] = n2 * q * (1 - q - m)
        # momentum-momentum
        ent[("pp", -1, -1)] = n2 * m * m
        ent[("pp", +1, -1)] = n2 * mp * m
        ent[("pp", -1, +1)] = n2 * m * mp
        ent[("pp", +1, +1)] = n2 * (1 - 2 * q * q + mp * mp)
    else:
        # unmasked product state (diagnostic): exact products everywhere
        ent[("xx", +1, +1)] = q * q
        ent[("xx", +1, -1)] = q * (1 - q)
        ent[("xx", -1, +1)] = (1 - q) * q
        ent[("xx", -1, -1)] = (1 - q) ** 2
        ent[("px", -1, -1)] = 0.0
        ent[("px", -1, +1)] = 0.0
        ent[("px", +1, -1)] = 1 - q
        ent[("px", +1, +1)] = q
        ent[("xp", -1, -1)] = 0.0
        ent[("xp", +1, -1)] = 0.0
        ent[("xp", -1, +1)] = 1 - q
        ent[("xp", +1, +1)] = q
        ent[("pp", -1, -1)] = 0.0
        ent[("pp", +1, -1)] = 0.0
        ent[("pp", -1, +1)] = 0.0
        ent[("pp", +1, +1)] = 1.0

    errors = {k: (0.0 if v == 0.0 else 30 * eps) for k, v in ent.items()}
    return QuadrantProbabilityTable(entries=ent, errors=errors,
                                    method="closed-form",
                                    scale=getattr(state.profile, "scale", None))


def hardy_probability_factorized(profile: MomentumProfile,
                                 spec: QuadratureSpec | None = None) -> float:
    """P_pp(-,-) = N^2 [\int_{-inf}^0 |psi_p|^2 dp]^2 for a factorized profile.

    The inner half-line integral is evaluated in the rescaled variable
    u = scale * |p| with singularity-aware quadrature plus an analytic
    asymptotic tail; for the exponential profile it equals 1/8 to ~1e-10
    and the result is 1/48 independently of the scale.
    """
    if spec is None:
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12, max_subdivisions=4000)
    position = position_profile(profile)
    q = positive_quadrant_mass(profile, position, spec)
    if profile.kind == "exponential":
        inner = negative_momentum_mass(spec)
    else:
        inner = _custom_negative_mass(profile, position, spec)
    n2 = 1.0 / (1.0 - q * q)
    return n2 * inner * inner


def _custom_negative_mass(profile, position, spec) -> float:
    # |psi_p(p)|^2 integrated over p < 0 for a numerically transformed
    # profile: adaptive away from 0, log-model patch on (-delta, 0),
    # 1/p^2 tail from the leading endpoint asymptote.
    from .numerics import oscillatory_transform

    def dens(p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        vals = np.array([abs(oscillatory_transform(position.f, v, "+",
                                                   QuadratureSpec(abs_tol=1e-11, rel_tol=0.0))) ** 2
                         for v in p])
        return vals

    delta, p_far = 1e-4, 60.0
    body = integrate_adaptive(dens, -p_far, -delta,
                              QuadratureSpec(abs_tol=1e-9, rel_tol=1e-9,
                                             max_subdivisions=800))
    # log-model patch: |psi_p|^2 ~ (alpha + beta ln|p|)^2 near 0
    d1, d2 = math.sqrt(dens(np.array([-delta]))[0]), math.sqrt(dens(np.array([-delta / 4]))[0])
    beta = (d2 - d1) / math.log(4.0) * -1.0
    alpha = d1 - beta * math.log(delta)

    def patch_integral(u):
        g = alpha + beta * math.log(u)
        return u * (g * g - 2 * beta * g + 2 * beta * beta)

    patch = patch_integral(delta)
    f0 = abs(complex(np.asarray(position(np.array([0.0])))[0]))
    tail = f0 ** 2 / (2 * math.pi) / p_far
    return body.value + patch + tail


# ---------------------------------------------------------------------------
# Grid path
# ---------------------------------------------------------------------------

def _grid_tables(state_xx: TwoParticleState) -> dict:
    """Entries of all four settings from the discrete transform path."""
    reps = {"xx": state_xx,
            "px": transforms.to_mixed_px(state_xx),
            "xp": transforms.to_mixed_xp(state_xx),
            "pp": transforms.to_momentum_pp(state_xx)}
    ent = {}
    sums = {}
    for name, st in reps.items():
        (a1, w1), (a2, w2) = st.axes
        dens = np.abs(st.values) ** 2
        for s1 in SIGNS:
            m1 = (a1 > 0) if s1 > 0 else (a1 < 0)
            for s2 in SIGNS:
                m2 = (a2 > 0) if s2 > 0 else (a2 < 0)
                ent[(name, s1, s2)] = float(
                    np.einsum("ij,i,j->", dens[np.ix_(m1, m2)], w1[m1], w2[m2]))
        sums[name] = float(np.einsum("ij,i,j->", dens, w1, w2))
    return ent, sums


def _grid_table(state: TwoParticleState,
                grid: GridSpec | None = None,
                self_check: bool = True) -> QuadrantProbabilityTable:
    if state.is_grid:
        gstate = state
        grid = state.grid
    else:
        grid = grid or GridSpec()
        gstate = build_state(state.profile, grid=grid)
    ent, sums = _grid_tables(gstate)

    errors = {}
    if self_check and grid.points_per_axis >= 128:
        coarse = build_state(gstate.profile, grid=grid.halved()) \
            if gstate.profile is not None else None
        ent2, _ = _grid_tables(coarse) if coarse is not None else (None, None)
    else:
        ent2 = None
    for key, v in ent.items():
        setting = key[0]
        deficit = abs(sums[setting] - 1.0)
        conv = abs(v - ent2[key]) if ent2 is not None else 0.0
        errors[key] = deficit + conv + 1e-6
    return QuadrantProbabilityTable(entries=ent, errors=errors, method="grid",
                                    scale=getattr(gstate.profile, "scale", None))


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------

def probability_table(state: TwoParticleState,
                      method: str = "auto",
                      grid: GridSpec | None = None,
                      self_check: bool = True) -> QuadrantProbabilityTable:
    """Full sixteen-entry table for a masked state.

    ``method`` is "closed-form", "grid", or "auto" (closed form whenever the
    state is factorized and not grid-tabulated).
    """
    if state.representation != "xx":
        raise ValueError("probability_table starts from the xx representation")
    if method == "auto":
        method = "grid" if state.is_grid else "closed-form"
    if method == "closed-form":
        if not state.factorized or state.is_grid:
            raise ValueError("closed-form path requires a factorized "
                             "closed-form state")
        return _closed_form_table(state)
    if method == "grid":
        return _grid_table(state, grid=grid, self_check=self_check)
    raise ValueError("method must be 'auto', 'closed-form' or 'grid'")


def quadrant_probability(state: TwoParticleState, setting: str,
                         s1: int, s2: int,
                         method: str = "auto",
                         grid: GridSpec | None = None) -> float:
    """Single joint probability P_setting(s1, s2) over the open quadrant."""
    if setting not in SETTING_PAIRS:
        raise ValueError(f"setting must be one of {SETTING_PAIRS}")
    if s1 not in SIGNS or s2 not in SIGNS:
        raise ValueError("signs must be +1 or -1")
    return probability_table(state, method=method, grid=grid,
                             self_check=False).value(setting, s1, s2)


@dataclass(frozen=True)
class ZeroConditionsReport:
    """The three zero conditions with budgets and a pass verdict."""

    p_xx_pp: float
    p_px_mm: float
    p_xp_mm: float
    budgets: tuple
    threshold: float
    method: str

    @property
    def values(self):
        return (self.p_xx_pp, self.p_px_mm, self.p_xp_mm)

    @property
    def passed(self) -> bool:
        return all(v <= max(self.threshold, b)
                   for v, b in zip(self.values, self.budgets))

    def to_dict(self):
        names = ("p_xx_pp", "p_px_mm", "p_xp_mm")
        return {"method": self.method, "threshold": self.threshold,
                "passed": self.passed,
                "conditions": [
                    {"name": n, "value": v, "budget": b,
                     "passed": bool(v <= max(self.threshold, b))}
                    for n, v, b in zip(names, self.values, self.budgets)]}


def zero_conditions_report(state: TwoParticleState,
                           threshold: float | None = None,
                           method: str = "auto",
                           grid: GridSpec | None = None) -> ZeroConditionsReport:
    """Evaluate P_xx(+,+), P_px(-,-), P_xp(-,-) with error budgets.

    On the closed-form path the three values are exact zeros (mask and
    support); the grid path reports them against its self-computed
    discretization bound.  The default pass threshold is 1e-9 closed form
    and 1e-3 on grids.
    """
    table = probability_table(state, method=method, grid=grid)
    if threshold is None:
        threshold = 1e-9 if table.method == "closed-form" else 1e-3
    keys = (("xx", +1, +1), ("px", -1, -1), ("xp", -1, -1))
    vals = tuple(table.entries[k] for k in keys)
    budgets = tuple(table.errors[k] for k in keys)
    return ZeroConditionsReport(p_xx_pp=vals[0], p_px_mm=vals[1],
                                p_xp_mm=vals[2], budgets=budgets,
                                threshold=threshold, method=table.method)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def table_to_json(table: QuadrantProbabilityTable, meta: dict | None = None) -> str:
    doc = {
        "schema_version": TABLE_SCHEMA_VERSION,
        "method": table.method,
        "scale": table.scale,
        "entries": [
            {"setting": setting, "sign1": _sign_char(s1), "sign2": _sign_char(s2),
             "value": table.entries[(setting, s1, s2)],
             "error": table.errors[(setting, s1, s2)]}
            for setting in SETTING_PAIRS for s1 in SIGNS for s2 in SIGNS],
        "setting_sums": {s: table.setting_sum(s) for s in SETTING_PAIRS},
    }
    if meta is not None:
        doc["meta"] = meta
    return json.dumps(doc, indent=2, sort_keys=True)


def table_from_json(text: str) -> QuadrantProbabilityTable:
    doc = json.loads(text)
    if doc.get("schema_version") != TABLE_SCHEMA_VERSION:
        raise ValueError("unsupported table schema version")
    ent, err = {}, {}
    for row in doc["entries"]:
        key = (row["setting"], +1 if row["sign1"] == "+" else -1,
               +1 if row["sign2"] == "+" else -1)
        ent[key] = row["value"]
        err[key] = row["error"]
    return QuadrantProbabilityTable(entries=ent, errors=err,
                                    method=doc["method"], scale=doc.get("scale"))


def table_to_csv(table: QuadrantProbabilityTable) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["setting", "sign1", "sign2", "value", "error"])
    for setting in SETTING_PAIRS:
        for s1 in SIGNS:
            for s2 in SIGNS:
                wr.writerow([setting, _sign_char(s1), _sign_char(s2),
                             repr(table.entries[(setting, s1, s2)]),
                             repr(table.errors[(setting, s1, s2)])])
    return buf.getvalue()
