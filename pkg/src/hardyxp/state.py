r"""Momentum profiles and the masked two-particle wavefunction.

The construction implemented here starts from a one-particle momentum
amplitude g(p) supported on p > 0 (unit norm, \int_0^\infty g^2 = 1).  Its
position-space image

    f(x) = (1/sqrt(2 pi)) \int_0^\infty e^{ipx} g(p) dp

is combined into a two-particle product and masked on the closed positive
quadrant with the Heaviside convention theta(0) = 1:

    psi_xx(x1, x2) = N [1 - theta(x1) theta(x2)] f(x1) f(x2),

with N fixed by unit total norm.  For a factorized profile with quadrant
mass q = \int_0^\infty |f|^2 dx the normalization reduces to
N = 1/sqrt(1 - q^2).

For the exponential profile g(p) = sqrt(2 lam) e^{-lam p} the position
amplitude has the closed form f(x) = i sqrt(lam/pi) / (x + i lam), a unit
Cauchy density in modulus squared, giving q = 1/2 and N = 2/sqrt(3).
The momentum amplitude of the half-line restriction theta(x) f(x),

    psi_p(p) = (1/sqrt(2 pi)) \int_0^\infty e^{-ipx} f(x) dx   (p <= 0),

is then -(i/pi) sqrt(lam/2) e^{lam|p|} Ei(-lam|p|): purely imaginary, with
an integrable logarithmic divergence at p = 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import (
    QuadratureSpec,
    SingularPointError,
    exp_integral_ei_scaled,
    integrate_adaptive,
    integrate_semi_infinite_with_tail,
    oscillatory_transform,
)

__all__ = [
    "MomentumProfile",
    "PositionProfile",
    "GridSpec",
    "TwoParticleState",
    "exponential_profile",
    "custom_profile",
    "position_profile",
    "build_state",
    "build_unmasked_product_state",
    "psi_p_closed_form",
    "negative_momentum_mass",
    "positive_quadrant_mass",
    "state_to_json",
    "state_from_json",
]

SQRT2PI = math.sqrt(2.0 * math.pi)

STATE_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# One-particle profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentumProfile:
    """One-particle momentum amplitude with positive support.

    Attributes
    ----------
    g : callable
        Vectorized amplitude g(p); exactly zero for p <= 0.
    kind : {"exponential", "custom"}
    scale : float or None
        Inverse-length scale lam for the exponential kind.
    nodes, values : ndarray or None
        Tabulation backing a custom profile (used for serialization).
    """

    g: Callable[[np.ndarray], np.ndarray]
    kind: str
    scale: float | None = None
    nodes: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    def __call__(self, p):
        return self.g(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class PositionProfile:
    """Position amplitude f(x) paired with its provenance.

    ``provenance`` is "closed-form" when an analytic expression backs the
    callable and "transformed" when it was produced by numerical
    transformation of g.
    """

    f: Callable[[np.ndarray], np.ndarray]
    provenance: str
    scale: float | None = None

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))


def exponential_profile(lam: float) -> MomentumProfile:
    """Unit-norm exponential momentum profile sqrt(2 lam) e^{-lam p}, p > 0.

    Raises
    ------
    ValueError
        If lam <= 0.
    """
    if not lam > 0:
        raise ValueError("scale lam must be > 0")

    def g(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        pos = p > 0
        out[pos] = math.sqrt(2.0 * lam) * np.exp(-lam * p[pos])
        return out if out.ndim else float(out)

    return MomentumProfile(g=g, kind="exponential", scale=lam)


def custom_profile(g: Callable[[np.ndarray], np.ndarray],
                   support_probe: np.ndarray | None = None,
                   norm_tol: float = 1e-10,
                   nodes: np.ndarray | None = None,
                   values: np.ndarray | None = None) -> MomentumProfile:
    """Wrap a user-supplied momentum amplitude after validating it.

    Checks that g vanishes on a probe lattice of non-positive momenta and
    that \int_0^\infty g^2 = 1 within ``norm_tol``.

    Raises
    ------
    ValueError
        On support violation or norm mismatch.
    """
    if support_probe is None:
        support_probe = -np.linspace(0.0, 10.0, 101)
    bad = np.max(np.abs(np.asarray(g(support_probe), dtype=float)))
    if bad > 0.0:
        raise ValueError(f"g must vanish for p <= 0 (max |g| = {bad:.3e} on probe)")
    norm = integrate_adaptive(lambda p: np.asarray(g(p), dtype=float) ** 2,
                              0.0, 200.0,
                              QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12))
    if abs(norm.value - 1.0) > norm_tol:
        raise ValueError(f"profile norm {norm.value:.12f} != 1 within {norm_tol:g}")
    return MomentumProfile(g=g, kind="custom", nodes=nodes, values=values)


def position_profile(profile: MomentumProfile,
                     spec: QuadratureSpec = QuadratureSpec()) -> PositionProfile:
    """Position amplitude f(x) = (1/sqrt(2 pi)) \int_0^\infty e^{ipx} g(p) dp.

    The exponential kind returns the closed form
    f(x) = i sqrt(lam/pi) / (x + i lam); custom profiles are transformed
    numerically point by point (accurate to ~1e-8).
    """
    if profile.kind == "exponential":
        lam = profile.scale

        def f(x):
            x = np.asarray(x, dtype=float)
            return 1j * math.sqrt(lam / math.pi) / (x + 1j * lam)

        return PositionProfile(f=f, provenance="closed-form", scale=lam)

    def f(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        # e^{ipx} g(p) integrated over p > 0: oscillatory in p with rate x
        out = np.array([oscillatory_transform(profile.g, -xi, "+", spec)
                        for xi in x])
        return out if np.ndim(x) else out[0]

    return PositionProfile(f=f, provenance="transformed", scale=None)


# ---------------------------------------------------------------------------
# Closed-form momentum amplitude of the masked half line (exponential kind)
# ---------------------------------------------------------------------------

def psi_p_closed_form(lam: float, p) -> complex:
    """Momentum amplitude of theta(x) f(x) for the exponential profile.

        psi_p(p) = -(i/pi) sqrt(lam/2) e^{lam|p|} Ei(-lam|p|),   p < 0.

    Evaluated through the overflow-free scaled exponential integral, so any
    negative p is safe.  The modulus decays like 1/(pi sqrt(2 lam) |p|) for
    large |p| and diverges logarithmically as p -> 0-.

    Raises
    ------
    SingularPointError
        At p = 0, where |psi_p| diverges (integrably); callers integrate
        across the singularity instead of evaluating at it.
    ValueError
        For p > 0 (this closed form only covers the negative half line)
        or lam <= 0.
    """
    if not lam > 0:
        raise ValueError("scale lam must be > 0")
    arr = np.asarray(p, dtype=float)
    if np.any(arr == 0):
        raise SingularPointError(
            "psi_p has a logarithmic singularity at p = 0; integrate across "
            "it rather than evaluating pointwise")
    if np.any(arr > 0):
        raise ValueError("psi_p_closed_form covers p < 0 only")
    val = -1j / math.pi * math.sqrt(lam / 2.0) * exp_integral_ei_scaled(lam * np.abs(arr))
    return val if arr.ndim else complex(val)


# Asymptotic tail coefficients of e^{2u} Ei^2(-u) = (e^u Ei(-u))^2 in powers
# u^{-2-k}, from squaring e^u Ei(-u) ~ -(1/u)(1 - 1/u + 2/u^2 - 6/u^3 + ...).
EI_SQUARED_TAIL = (1.0, -2.0, 5.0, -16.0, 64.0, -312.0)


def negative_momentum_mass(spec: QuadratureSpec | None = None) -> float:
    """Half-line mass \int_{-inf}^0 |psi_p|^2 dp for the exponential profile.

    Computed once in the rescaled variable u = lam |p| (the result is scale
    free):

        (1/(2 pi^2)) \int_0^\infty e^{2u} Ei^2(-u) du.

    The integrand has a log^2 singularity at 0 and a 1/u^2 tail; the finite
    window [0, 50] is integrated adaptively and the tail summed analytically.
    Accuracy is ~1e-10, well inside the advertised 1e-8.
    """
    if spec is None:
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12, max_subdivisions=4000)
    res = integrate_semi_infinite_with_tail(
        lambda u: exp_integral_ei_scaled(u) ** 2, 0.0, EI_SQUARED_TAIL, spec)
    return res.value / (2.0 * math.pi ** 2)


def positive_quadrant_mass(profile: MomentumProfile,
                           position: PositionProfile | None = None,
                           spec: QuadratureSpec | None = None) -> float:
    """Quadrant mass q = \int_0^\infty |f(x)|^2 dx of the position density.

    For the exponential kind |f|^2 is the Cauchy density
    (lam/pi)/(x^2 + lam^2); its 1/x^2 tail is handled analytically.  Custom
    profiles integrate the numerically transformed f (slow but exact to the
    transform accuracy).
    """
    if spec is None:
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12, max_subdivisions=4000)
    if position is None:
        position = position_profile(profile)
    if profile.kind == "exponential":
        lam = profile.scale
        dens = lambda x: np.abs(position(x)) ** 2
        tail = (lam / math.pi, 0.0, -lam ** 3 / math.pi, 0.0, lam ** 5 / math.pi, 0.0)
        res = integrate_semi_infinite_with_tail(dens, 0.0, tail, spec,
                                                cutoff=max(50.0, 50.0 * lam))
        return res.value
    dens = lambda x: np.abs(position(x)) ** 2
    g0 = float(np.asarray(profile(np.array([1e-9])))[0])  # leading 1/x amplitude
    c0 = g0 ** 2 / (2.0 * math.pi)
    loose = QuadratureSpec(abs_tol=1e-9, rel_tol=1e-9, max_subdivisions=spec.max_subdivisions)
    res = integrate_semi_infinite_with_tail(dens, 0.0, (c0,), loose)
    return res.value


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Sampling grid for tabulated states and the grid transform path.

    Parameters
    ----------
    extent : float
        For the linear mapping, the full axis length: x in [-L/2, L/2).
        For the arctan mapping, a resolution scale: nodes follow
        x = sigma tan(theta) with sigma = extent/10 on the position side
        (momentum grids derived from it use sigma_p = 16/extent), reaching
        |x| ~ 0.65 sigma N while keeping ~half the nodes inside |x| < sigma.
    points_per_axis : int
        Even, >= 64.  With the linear mapping x = 0 is then a grid node
        (matching the theta(0) = 1 mask convention); the arctan mapping
        uses a midpoint layout that straddles 0 instead, so the singular
        p = 0 point of momentum densities is never sampled.
    mapping : {"linear", "arctan"}
    """

    extent: float = 40.0
    points_per_axis: int = 1024
    mapping: str = "arctan"

    def __post_init__(self):
        if not self.extent > 0:
            raise ValueError("extent must be > 0")
        if self.points_per_axis < 64 or self.points_per_axis % 2:
            raise ValueError("points_per_axis must be even and >= 64")
        if self.mapping not in ("linear", "arctan"):
            raise ValueError("mapping must be 'linear' or 'arctan'")

    def position_axis(self):
        """Nodes and quadrature weights of the position-side axis."""
        n = self.points_per_axis
        if self.mapping == "linear":
            dx = self.extent / n
            x = (np.arange(n) - n // 2) * dx
            w = np.full(n, dx)
            return x, w
        sigma = self.extent / 10.0
        return _arctan_axis(n, sigma)

    def momentum_axis(self):
        """Nodes and weights of the conjugate momentum-side axis."""
        n = self.points_per_axis
        if self.mapping == "linear":
            dp = 2.0 * math.pi / self.extent
            p = (np.arange(n) - n // 2) * dp
            w = np.full(n, dp)
            return p, w
        sigma_p = 16.0 / self.extent
        return _arctan_axis(n, sigma_p)

    def halved(self) -> "GridSpec":
        return GridSpec(self.extent, self.points_per_axis // 2, self.mapping)

    def to_dict(self):
        return {"extent": self.extent, "points_per_axis": self.points_per_axis,
                "mapping": self.mapping}


def _arctan_axis(n: int, sigma: float):
    dth = math.pi / n
    th = (np.arange(n) + 0.5 - n / 2) * dth
    x = sigma * np.tan(th)
    w = sigma * dth / np.cos(th) ** 2
    return x, w


# ---------------------------------------------------------------------------
# Two-particle states
# ---------------------------------------------------------------------------

def _heaviside(x):
    # theta(0) = 1 by convention
    return (np.asarray(x) >= 0).astype(float)


@dataclass(frozen=True)
class TwoParticleState:
    """Representation-tagged two-particle amplitude.

    Closed-form states carry callables built from the profile; grid states
    carry sampled amplitudes with per-axis nodes and quadrature weights.
    States are immutable after construction.

    Attributes
    ----------
    representation : {"xx", "px", "xp", "pp"}
    amplitude : callable
        Vectorized (broadcasting) amplitude of the two outcome variables.
    norm_constant : float
        The mask-induced renormalization N.
    factorized : bool
        Whether the underlying momentum profile factorizes.
    profile : MomentumProfile or None
    position : PositionProfile or None
    quadrant_mass : float or None
        q = \int_0^\infty |f|^2 dx (factorized closed-form states).
    grid : GridSpec or None
        Present for grid states.
    axes : tuple or None
        ((nodes1, weights1), (nodes2, weights2)) for grid states.
    values : ndarray or None
        Sampled amplitude for grid states.
    """

    representation: str
    amplitude: Callable
    norm_constant: float
    factorized: bool
    profile: MomentumProfile | None = None
    position: PositionProfile | None = None
    quadrant_mass: float | None = None
    grid: GridSpec | None = None
    axes: tuple | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    masked: bool = True

    @property
    def is_grid(self) -> bool:
        return self.values is not None

    def grid_norm(self) -> float:
        """Discrete total squared norm (grid states only)."""
        if not self.is_grid:
            raise ValueError("grid_norm applies to grid states")
        (a1, w1), (a2, w2) = self.axes
        return float(np.einsum("ij,i,j->", np.abs(self.values) ** 2, w1, w2))


def build_state(profile: MomentumProfile,
                grid: GridSpec | None = None,
                spec: QuadratureSpec | None = None) -> TwoParticleState:
    """Construct the masked position-position state from a factorized profile.

    Returns the closed-form state when ``grid`` is None, otherwise a state
    tabulated on ``grid`` (normalized with respect to the discrete grid
    measure).  In both cases the amplitude vanishes identically on the
    closed quadrant x1 >= 0 and x2 >= 0.

    Raises
    ------
    ValueError
        If the profile violates positive support or is not normalizable.
    """
    position = position_profile(profile)
    q = positive_quadrant_mass(profile, position, spec)
    if not 0.0 < q < 1.0:
        raise ValueError(f"quadrant mass q = {q} outside (0, 1); "
                         "state not normalizable by the mask construction")
    n_const = 1.0 / math.sqrt(1.0 - q * q)

    if grid is None:
        def amplitude(x1, x2):
            x1 = np.asarray(x1, dtype=float)
            x2 = np.asarray(x2, dtype=float)
            mask = 1.0 - _heaviside(x1) * _heaviside(x2)
            return n_const * mask * position(x1) * position(x2)

        return TwoParticleState(
            representation="xx", amplitude=amplitude, norm_constant=n_const,
            factorized=True, profile=profile, position=position,
            quadrant_mass=q)

    x, w = grid.position_axis()
    fx = np.asarray(position(x), dtype=complex)
    mask = 1.0 - _heaviside(x)[:, None] * _heaviside(x)[None, :]
    vals = fx[:, None] * fx[None, :] * mask
    nrm2 = float(np.einsum("ij,i,j->", np.abs(vals) ** 2, w, w))
    if not np.isfinite(nrm2) or nrm2 <= 0:
        raise ValueError("grid state has non-normalizable samples")
    n_grid = 1.0 / math.sqrt(nrm2)
    vals = vals * n_grid

    def amplitude(x1, x2):
        return _bilinear(x, x, vals, x1, x2)

    return TwoParticleState(
        representation="xx", amplitude=amplitude, norm_constant=n_grid,
        factorized=True, profile=profile, position=position,
        quadrant_mass=q, grid=grid, axes=((x, w), (x, w)), values=vals)


def build_unmasked_product_state(profile: MomentumProfile) -> TwoParticleState:
    """Product state f(x1) f(x2) without the quadrant mask (diagnostic).

    This state violates the positive-quadrant zero condition by
    construction; it exists so that the failure mode of the zero-condition
    report can be exercised.
    """
    position = position_profile(profile)
    q = positive_quadrant_mass(profile, position)

    def amplitude(x1, x2):
        return position(np.asarray(x1, dtype=float)) * position(np.asarray(x2, dtype=float))

    return TwoParticleState(
        representation="xx", amplitude=amplitude, norm_constant=1.0,
        factorized=True, profile=profile, position=position, quadrant_mass=q,
        masked=False)


def build_state_from_amplitude(g2: Callable,
                               grid: GridSpec,
                               support_tol: float = 1e-12) -> TwoParticleState:
    """Masked state from a general two-particle momentum amplitude g2(p1, p2).

    The amplitude is sampled on the momentum grid, transformed to position
    space, masked and grid-normalized.  ``g2`` must vanish unless both
    momenta are positive.  Only the linear mapping is supported here (it
    keeps the discrete transform unitary); heavy-tailed custom amplitudes
    need a factorized profile instead.

    Raises
    ------
    ValueError
        On support violation, non-normalizable samples, or a non-linear
        grid mapping.
    """
    from .transforms import grid_partial_ft  # local import to avoid a cycle

    if grid.mapping != "linear":
        raise ValueError("build_state_from_amplitude requires a linear grid")
    probe = np.linspace(-5.0, 5.0, 21)
    pp1, pp2 = np.meshgrid(probe, probe, indexing="ij")
    vals = np.asarray(g2(pp1, pp2), dtype=complex)
    outside = (pp1 <= 0) | (pp2 <= 0)
    worst = float(np.max(np.abs(vals[outside]))) if np.any(outside) else 0.0
    if worst > support_tol:
        raise ValueError(f"g2 must vanish unless p1 > 0 and p2 > 0 "
                         f"(max |g2| = {worst:.3e} outside)")

    p, wp = grid.momentum_axis()
    gp = np.asarray(g2(p[:, None], p[None, :]), dtype=complex)
    fxx = grid_partial_ft(gp, axis=1, direction="p->x", grid=grid)
    fxx = grid_partial_ft(fxx, axis=2, direction="p->x", grid=grid)
    x, wx = grid.position_axis()
    mask = 1.0 - _heaviside(x)[:, None] * _heaviside(x)[None, :]
    fxx = fxx * mask
    nrm2 = float(np.einsum("ij,i,j->", np.abs(fxx) ** 2, wx, wx))
    if not np.isfinite(nrm2) or nrm2 <= 0:
        raise ValueError("g2 produced a non-normalizable masked state")
    n_grid = 1.0 / math.sqrt(nrm2)
    fxx = fxx * n_grid

    def amplitude(x1, x2):
        return _bilinear(x, x, fxx, x1, x2)

    return TwoParticleState(
        representation="xx", amplitude=amplitude, norm_constant=n_grid,
        factorized=False, grid=grid, axes=((x, wx), (x, wx)), values=fxx)


def _bilinear(ax1, ax2, vals, x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    i = np.clip(np.searchsorted(ax1, x1) - 1, 0, len(ax1) - 2)
    j = np.clip(np.searchsorted(ax2, x2) - 1, 0, len(ax2) - 2)
    t = np.clip((x1 - ax1[i]) / (ax1[i + 1] - ax1[i]), 0.0, 1.0)
    u = np.clip((x2 - ax2[j]) / (ax2[j + 1] - ax2[j]), 0.0, 1.0)
    v = (vals[i, j] * (1 - t) * (1 - u) + vals[i + 1, j] * t * (1 - u)
         + vals[i, j + 1] * (1 - t) * u + vals[i + 1, j + 1] * t * u)
    return v


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def state_to_json(state: TwoParticleState) -> str:
    """Serialize a state to the documented JSON schema (see docs/schemas).

    Grid states record the grid spec and the profile; amplitudes are
    regenerated on import rather than shipped.
    """
    doc = {
        "schema_version": STATE_SCHEMA_VERSION,
        "representation": state.representation,
        "norm_constant": state.norm_constant,
        "factorized": state.factorized,
        "grid": state.grid.to_dict() if state.grid else None,
    }
    prof = state.profile
    if prof is None:
        raise ValueError("only profile-backed states are serializable")
    if prof.kind == "exponential":
        doc["profile"] = {"kind": "exponential", "lambda": prof.scale}
    else:
        if prof.nodes is None or prof.values is None:
            raise ValueError("custom profiles need a tabulation to serialize")
        doc["profile"] = {"kind": "custom",
                          "nodes": list(map(float, prof.nodes)),
                          "values": list(map(float, prof.values))}
    return json.dumps(doc, indent=2, sort_keys=True)


def state_from_json(text: str) -> TwoParticleState:
    """Rebuild a state from :func:`state_to_json` output."""
    doc = json.loads(text)
    if doc.get("schema_version") != STATE_SCHEMA_VERSION:
        raise ValueError("unsupported state schema version")
    pd = doc["profile"]
    if pd["kind"] == "exponential":
        profile = exponential_profile(pd["lambda"])
    else:
        nodes = np.asarray(pd["nodes"], dtype=float)
        values = np.asarray(pd["values"], dtype=float)

        def g(p):
            p = np.asarray(p, dtype=float)
            out = np.interp(p, nodes, values, left=0.0, right=0.0)
            return np.where(p > 0, out, 0.0)

        # tabulation-grade norm tolerance for round-tripped profiles
        profile = custom_profile(g, norm_tol=1e-6, nodes=nodes, values=values)
    grid = GridSpec(**doc["grid"]) if doc.get("grid") else None
    state = build_state(profile, grid=grid)
    if doc["representation"] != "xx":
        from . import transforms
        state = {"px": transforms.to_mixed_px,
                 "xp": transforms.to_mixed_xp,
                 "pp": transforms.to_momentum_pp}[doc["representation"]](state)
    return state
