"""Continuous set representations and the matrix-exponential kernel.

Boxes are axis-aligned interval vectors, zonotopes are center + generator
matrices, and template polytopes bound sets in a fixed direction family.
Everything here is a pure value: operations return new objects and never
mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MatrixOverflow

# Scaling-and-squaring halves the argument until its 1-norm is at or below
# this threshold, then sums the Taylor series.
_EXPM_SCALE_THRESHOLD = 0.5
# Series terms are added until a term's norm drops below this fraction of
# the accumulated result's norm.
_EXPM_TRUNCATION = 1e-16
# Arguments with 1-norm beyond this cannot be squared back meaningfully.
_EXPM_NORM_LIMIT = 1e6

DEFAULT_ORDER_CAP = 20


def _as_float_array(a, name):
    out = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must have finite entries")
    return out


@dataclass(frozen=True)
class Box:
    """Axis-aligned box: per-dimension closed intervals [lo_i, hi_i]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_float_array(self.lo, "lo")
        hi = _as_float_array(self.hi, "hi")
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("box bounds must be equal-length vectors")
        if np.any(lo > hi):
            raise ValueError("box has lo > hi")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    def contains(self, point, slack: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lo - slack) and np.all(p <= self.hi + slack))

    def hull(self, other: "Box") -> "Box":
        if other.dim != self.dim:
            raise DimensionMismatch("box hull dimension mismatch")
        return Box(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def widen(self, margin) -> "Box":
        m = np.broadcast_to(np.asarray(margin, dtype=float), self.lo.shape)
        return Box(self.lo - m, self.hi + m)

    def to_zonotope(self) -> "Zonotope":
        r = self.radius
        gens = np.diag(r)[:, r > 0]
        return Zonotope(self.center, gens)

    def sup_norm(self) -> float:
        """Largest infinity-norm over points of the box."""
        return float(np.max(np.maximum(np.abs(self.lo), np.abs(self.hi))))


@dataclass(frozen=True)
class Zonotope:
    """Center vector plus an n x p generator matrix (p = 0 is a point)."""

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = _as_float_array(self.center, "center")
        g = _as_float_array(self.generators, "generators")
        if c.ndim != 1:
            raise DimensionMismatch("center must be a vector")
        if g.ndim != 2 or g.shape[0] != c.shape[0]:
            raise DimensionMismatch("generators must be an n x p matrix")
        c.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", g)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def order(self) -> int:
        return self.generators.shape[1]

    @classmethod
    def point(cls, x) -> "Zonotope":
        x = np.asarray(x, dtype=float)
        return cls(x, np.zeros((x.shape[0], 0)))

    def sample(self, count: int, seed: int) -> np.ndarray:
        """Deterministic interior points, rows = samples."""
        rng = np.random.default_rng(seed)
        coeffs = rng.uniform(-1.0, 1.0, size=(count, self.order))
        return self.center + coeffs @ self.generators.T


def matrix_exponential(a, t: float = 1.0) -> np.ndarray:
    """e^(A t) by scaling-and-squaring with a truncated Taylor series.

    The argument is halved until its 1-norm is <= 0.5, the series is summed
    until terms fall below 1e-16 of the running result, then the result is
    squared back up.
    """
    a = _as_float_array(a, "matrix")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("matrix_exponential needs a square matrix")
    m = a * t
    norm = float(np.linalg.norm(m, 1))
    if not np.isfinite(norm) or norm > _EXPM_NORM_LIMIT:
        raise MatrixOverflow(f"matrix exponential argument norm {norm:g} too large")
    squarings = 0
    while norm > _EXPM_SCALE_THRESHOLD:
        m = m / 2.0
        norm /= 2.0
        squarings += 1
    n = a.shape[0]
    result = np.eye(n)
    term = np.eye(n)
    k = 1
    while True:
        term = term @ m / k
        result = result + term
        if np.linalg.norm(term, 1) < _EXPM_TRUNCATION * np.linalg.norm(result, 1):
            break
        k += 1
        if k > 200:  # series always converges well below this for norm <= 0.5
            break
    for _ in range(squarings):
        result = result @ result
    return result


def exp_with_integral(a, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (e^(A t), integral_0^t e^(A s) ds) in one call.

    Uses the block trick exp([[A, I], [0, 0]] t) whose top-right block is the
    integral, so no invertibility assumption on A is needed.
    """
    a = _as_float_array(a, "matrix")
    n = a.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = a
    block[:n, n:] = np.eye(n)
    big = matrix_exponential(block, t)
    return big[:n, :n], big[:n, n:]


def linear_map(matrix, z: Zonotope) -> Zonotope:
    m = _as_float_array(matrix, "matrix")
    if m.ndim != 2 or m.shape[1] != z.dim:
        raise DimensionMismatch("linear_map dimension mismatch")
    return Zonotope(m @ z.center, m @ z.generators)


def translate(z: Zonotope, offset) -> Zonotope:
    off = np.asarray(offset, dtype=float)
    if off.shape != z.center.shape:
        raise DimensionMismatch("translate offset dimension mismatch")
    return Zonotope(z.center + off, z.generators)


def minkowski_sum(z1: Zonotope, z2: Zonotope) -> Zonotope:
    if z1.dim != z2.dim:
        raise DimensionMismatch("minkowski_sum dimension mismatch")
    return Zonotope(z1.center + z2.center, np.hstack([z1.generators, z2.generators]))


def support(z: Zonotope, direction) -> float:
    """max over the zonotope of direction . x."""
    d = np.asarray(direction, dtype=float)
    if d.shape != z.center.shape:
        raise DimensionMismatch("support direction dimension mismatch")
    return float(d @ z.center + np.abs(d @ z.generators).sum())


def box_hull(z: Zonotope) -> Box:
    r = np.abs(z.generators).sum(axis=1)
    return Box(z.center - r, z.center + r)


def hull_zonotope(z1: Zonotope, z2: Zonotope) -> Zonotope:
    """Zonotope enclosure of the union (and chords) of two zonotopes.

    With generator lists padded to equal width p, the enclosure
    [center (c1+c2)/2, generators (G1+G2)/2 | (c1-c2)/2 | (G1-G2)/2]
    contains every point lam*x1 + (1-lam)*x2 with matched coefficients,
    hence both operands.
    """
    if z1.dim != z2.dim:
        raise DimensionMismatch("hull dimension mismatch")
    p = max(z1.order, z2.order)
    g1 = np.hstack([z1.generators, np.zeros((z1.dim, p - z1.order))])
    g2 = np.hstack([z2.generators, np.zeros((z2.dim, p - z2.order))])
    center = 0.5 * (z1.center + z2.center)
    mid = 0.5 * (g1 + g2)
    shift = 0.5 * (z1.center - z2.center)
    diff = 0.5 * (g1 - g2)
    gens = np.hstack([mid, shift[:, None], diff])
    keep = np.abs(gens).sum(axis=0) > 0.0
    return Zonotope(center, gens[:, keep])


def reduce_order(z: Zonotope, max_order: int = DEFAULT_ORDER_CAP) -> Zonotope:
    """Cap the generator count by boxing the smallest generators.

    The largest (max_order - n) generators by 1-norm are kept verbatim; the
    rest collapse into an axis-aligned block, which can only enlarge the
    set. Ties break on generator index so the result is deterministic.
    """
    n, p = z.dim, z.order
    if p <= max_order:
        return z
    keep_count = max(max_order - n, 0)
    norms = np.abs(z.generators).sum(axis=0)
    order_idx = np.lexsort((np.arange(p), -norms))
    keep = np.sort(order_idx[:keep_count])
    drop = np.sort(order_idx[keep_count:])
    box_radius = np.abs(z.generators[:, drop]).sum(axis=1)
    box_gens = np.diag(box_radius)[:, box_radius > 0]
    return Zonotope(z.center, np.hstack([z.generators[:, keep], box_gens]))


def intersect_condition(box: Box, condition) -> Box | None:
    """Clamp a box against a conjunction of linear constraints.

    Axis-aligned constraints clamp their interval directly; general rows
    tighten each coordinate by interval propagation (exact for a single
    halfspace, sound for the conjunction). Strict relations are treated as
    their closed counterparts. Returns None when any interval empties.
    """
    lo = box.lo.copy()
    hi = box.hi.copy()
    for con in condition.constraints:
        rows = [(np.asarray(con.coeffs, dtype=float), con.bound)]
        if con.relation in (">=", ">"):
            rows = [(-rows[0][0], -rows[0][1])]
        elif con.relation == "==":
            rows = [(rows[0][0], rows[0][1]), (-rows[0][0], -rows[0][1])]
        for coeffs, bound in rows:
            # min of coeffs . x over the current box, per-term
            terms_min = np.where(coeffs >= 0, coeffs * lo, coeffs * hi)
            total_min = terms_min.sum()
            if total_min > bound:
                return None
            for i in np.flatnonzero(coeffs):
                rest = total_min - terms_min[i]
                limit = (bound - rest) / coeffs[i]
                if coeffs[i] > 0:
                    hi[i] = min(hi[i], limit)
                else:
                    lo[i] = max(lo[i], limit)
                if lo[i] > hi[i]:
                    return None
    return Box(lo, hi)


@dataclass(frozen=True)
class TemplatePolytope:
    """Directions (k x n) with offsets: the set {x : D x <= o} row-wise."""

    directions: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        d = _as_float_array(self.directions, "directions")
        o = _as_float_array(self.offsets, "offsets")
        if d.ndim != 2 or o.ndim != 1 or d.shape[0] != o.shape[0]:
            raise DimensionMismatch("template shape mismatch")
        d.flags.writeable = False
        o.flags.writeable = False
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "offsets", o)

    @classmethod
    def from_zonotope(cls, z: Zonotope, directions) -> "TemplatePolytope":
        d = np.asarray(directions, dtype=float)
        offs = np.array([support(z, row) for row in d])
        return cls(d, offs)

    def contains(self, point, slack: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(self.directions @ p <= self.offsets + slack))


def box_octagon_directions(n: int) -> np.ndarray:
    """+-e_i plus all +-e_i +- e_j rows: the box+octagon template family."""
    rows = []
    eye = np.eye(n)
    for i in range(n):
        rows.append(eye[i])
        rows.append(-eye[i])
    for i in range(n):
        for j in range(i + 1, n):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    rows.append(si * eye[i] + sj * eye[j])
    return np.array(rows)
