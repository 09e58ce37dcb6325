"""Scalar fields over box-and-point domains, with semicontinuity audits.

Values live on the extended real line, represented as Python floats with
``math.inf`` for the two endpoints.  Fields carry a semicontinuity tag that
is never proven symbolically; it is audited empirically on grids.  The
audit convention throughout the package: a suspicious jump to a single
neighbouring grid cell is tolerated when the next cell in the same
direction recovers, because an exceptional point adjacent to the probe is
exactly what semicontinuity permits in the limit.  Two consecutive bad
cells are treated as a genuine violation at the current resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from .errors import (
    DimensionMismatchError,
    IndeterminateSumError,
    TagError,
)

TAG_UPPER = "upper"
TAG_LOWER = "lower"
TAG_CONTINUOUS = "continuous"
TAG_UNKNOWN = "unknown"
_TAGS = (TAG_UPPER, TAG_LOWER, TAG_CONTINUOUS, TAG_UNKNOWN)

#: Default seed for every pseudo-random probe in the package.
DEFAULT_SEED = 0x5E1EC7

#: Compressed values are clamped this far away from +-1 before decompression.
STRICTNESS_MARGIN = 1e-9

_COMPRESS_DPS = 50


# ---------------------------------------------------------------------------
# compression of the extended line onto [-1, 1]


def compress(v):
    """Squash an extended real onto [-1, 1] via v / sqrt(1 + v^2].

    +inf maps to exactly 1 and -inf to exactly -1; the map is strictly
    increasing.  The result is an arbitrary-precision real (an ``mpmath``
    value, usable in ordinary arithmetic and comparisons; cast with
    ``float`` when a machine double is wanted).  Working at extended
    precision is what keeps ``decompress(compress(v))`` faithful for large
    v, where double rounding of values near 1 would destroy the input.
    """
    v = _as_extended(v)
    if math.isinf(float(v)):
        return mpmath.mpf(1 if float(v) > 0 else -1)
    with mpmath.workdps(_COMPRESS_DPS):
        x = mpmath.mpf(v)
        return x / mpmath.sqrt(1 + x * x)


def decompress(w):
    """Inverse of :func:`compress` on the open interval (-1, 1).

    Raises ``ValueError`` at or beyond the endpoints: the preimages of
    +-1 are the infinities, which are not representable targets here.
    """
    with mpmath.workdps(_COMPRESS_DPS):
        x = mpmath.mpf(w)
        if abs(x) >= 1:
            raise ValueError(f"decompress needs |w| < 1, got {float(x)!r}")
        return x / mpmath.sqrt((1 - x) * (1 + x))


def _as_extended(v) -> float:
    out = float(v)
    if math.isnan(out):
        raise ValueError("NaN is not an extended real")
    return out


def squash(v: float) -> float:
    """Double-precision fast path of :func:`compress`, for inner loops."""
    v = _as_extended(v)
    if math.isinf(v):
        return 1.0 if v > 0 else -1.0
    return v / math.hypot(1.0, v)


def unsquash(w: float) -> float:
    """Double-precision fast path of :func:`decompress`."""
    w = float(w)
    if abs(w) >= 1.0:
        raise ValueError(f"unsquash needs |w| < 1, got {w!r}")
    return w / math.sqrt((1.0 - w) * (1.0 + w))


# ---------------------------------------------------------------------------
# domains and grids


@dataclass(frozen=True)
class Domain:
    """A finite union of closed axis-aligned boxes and isolated points."""

    ambient_dim: int
    boxes: tuple = ()
    points: tuple = ()

    def __post_init__(self):
        n = self.ambient_dim
        if n < 1:
            raise DimensionMismatchError("ambient_dim must be >= 1")
        boxes = []
        for lo, hi in self.boxes:
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            if lo.shape != (n,) or hi.shape != (n,):
                raise DimensionMismatchError("box bounds must have shape (n,)")
            if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
                raise ValueError("domain boxes must be bounded")
            if np.any(lo > hi):
                raise ValueError("box has lo > hi")
            boxes.append((lo, hi))
        pts = []
        for p in self.points:
            p = np.asarray(p, dtype=float)
            if p.shape != (n,):
                raise DimensionMismatchError("point must have shape (n,)")
            if not np.all(np.isfinite(p)):
                raise ValueError("domain points must be finite")
            pts.append(p)
        if not boxes and not pts:
            raise ValueError("domain must be nonempty")
        object.__setattr__(self, "boxes", tuple(boxes))
        object.__setattr__(self, "points", tuple(pts))

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        for lo, hi in self.boxes:
            if np.all(x >= lo - tol) and np.all(x <= hi + tol):
                return True
        for p in self.points:
            if np.max(np.abs(x - p), initial=0.0) <= tol:
                return True
        return False

    def grid(self, per_axis: int) -> "Grid":
        return Grid.from_domain(self, per_axis)


class Grid:
    """Sample points of a domain with an axis-neighbour relation.

    Each box contributes a regular lattice (``per_axis`` points per axis of
    nonzero width); isolated points contribute themselves, with no
    neighbours.  ``directed_edges`` lists every ordered adjacent pair
    together with the index of the next point in the same direction, which
    the audits use for the two-cell confirmation rule.
    """

    def __init__(self, domain: Domain, per_axis: int):
        if per_axis < 1:
            raise ValueError("per_axis must be >= 1")
        self.domain = domain
        self.per_axis = per_axis
        n = domain.ambient_dim
        blocks = []
        pts = []
        start = 0
        for lo, hi in domain.boxes:
            axes = []
            for a in range(n):
                if hi[a] > lo[a]:
                    axes.append(np.linspace(lo[a], hi[a], per_axis))
                else:
                    axes.append(np.array([lo[a]]))
            shape = tuple(len(ax) for ax in axes)
            mesh = np.meshgrid(*axes, indexing="ij")
            block = np.column_stack([m.reshape(-1) for m in mesh])
            spacing = np.array(
                [ax[1] - ax[0] if len(ax) > 1 else 0.0 for ax in axes]
            )
            blocks.append((start, shape, spacing))
            pts.append(block)
            start += block.shape[0]
        for p in domain.points:
            pts.append(p.reshape(1, n))
            start += 1
        self.points = np.vstack(pts) if pts else np.empty((0, n))
        self._blocks = blocks
        self._edges = self._build_edges()

    def __len__(self) -> int:
        return self.points.shape[0]

    def _build_edges(self) -> np.ndarray:
        # columns: tail, head, far (next point past head; -1 if none)
        rows = []
        self._edge_spacing = []
        for start, shape, spacing in self._blocks:
            size = int(np.prod(shape))
            strides = np.ones(len(shape), dtype=int)
            for a in range(len(shape) - 2, -1, -1):
                strides[a] = strides[a + 1] * shape[a + 1]
            idx = np.arange(size)
            coords = np.array(np.unravel_index(idx, shape)).T
            for a, width in enumerate(shape):
                if width < 2:
                    continue
                for step in (1, -1):
                    ok = (coords[:, a] + step >= 0) & (coords[:, a] + step < width)
                    tails = idx[ok]
                    heads = tails + step * strides[a]
                    far = heads + step * strides[a]
                    far_ok = (coords[ok, a] + 2 * step >= 0) & (
                        coords[ok, a] + 2 * step < width
                    )
                    far = np.where(far_ok, far, -1 - start)
                    rows.append(
                        np.column_stack([tails, heads, far]) + start
                    )
                    self._edge_spacing.extend([spacing[a]] * len(tails))
        if rows:
            return np.vstack(rows)
        return np.empty((0, 3), dtype=int)

    def directed_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(edges, spacing): edges has columns (tail, head, far)."""
        return self._edges, np.asarray(self._edge_spacing)

    def neighbors(self, i: int) -> list[int]:
        e = self._edges
        return [int(h) for t, h, _ in e if t == i]

    def max_spacing(self) -> float:
        out = 0.0
        for _, _, spacing in self._blocks:
            if spacing.size:
                out = max(out, float(np.max(spacing)))
        return out

    @classmethod
    def from_domain(cls, domain: Domain, per_axis: int) -> "Grid":
        return cls(domain, per_axis)

    def refined(self) -> "Grid":
        """Grid over the same domain with halved box spacing."""
        if self.per_axis < 2:
            return Grid(self.domain, self.per_axis)
        return Grid(self.domain, 2 * (self.per_axis - 1) + 1)


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class ScalarField:
    """A rule from domain points to extended reals, plus a claimed tag."""

    domain: Domain | None
    rule: Callable[[np.ndarray], float]
    tag: str = TAG_UNKNOWN
    name: str = ""

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise TagError(f"unknown tag {self.tag!r}")

    def __call__(self, x) -> float:
        v = float(self.rule(np.asarray(x, dtype=float)))
        if math.isnan(v):
            raise ValueError(f"field {self.name or '<anon>'} returned NaN")
        return v

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return add(self, other)

    def __neg__(self) -> "ScalarField":
        return negate(self)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return add(self, negate(other))


@dataclass(frozen=True)
class VectorField:
    """An R^m-valued rule; components share one semicontinuity tag."""

    domain: Domain | None
    dim: int
    rule: Callable[[np.ndarray], np.ndarray]
    tag: str = TAG_UNKNOWN
    name: str = ""

    def __call__(self, x) -> np.ndarray:
        y = np.asarray(self.rule(np.asarray(x, dtype=float)), dtype=float)
        if y.shape != (self.dim,):
            raise DimensionMismatchError(
                f"vector field {self.name or '<anon>'} returned shape {y.shape}"
            )
        return y

    def component(self, i: int) -> ScalarField:
        return ScalarField(
            self.domain,
            lambda x, i=i: float(self.rule(x)[i]),
            tag=self.tag,
            name=f"{self.name}[{i}]" if self.name else "",
        )

    @staticmethod
    def from_components(parts: Sequence[ScalarField], name: str = "") -> "VectorField":
        dom = parts[0].domain
        tag = parts[0].tag
        if any(p.tag != tag for p in parts):
            tag = TAG_UNKNOWN

        def rule(x, parts=tuple(parts)):
            return np.array([p(x) for p in parts])

        return VectorField(dom, len(parts), rule, tag=tag, name=name)


def constant_field(domain: Domain | None, value: float, name: str = "") -> ScalarField:
    v = _as_extended(value)
    return ScalarField(domain, lambda x: v, tag=TAG_CONTINUOUS, name=name)


def _sum_tag(a: str, b: str) -> str:
    if a == TAG_CONTINUOUS:
        return b
    if b == TAG_CONTINUOUS:
        return a
    if a == b and a in (TAG_UPPER, TAG_LOWER):
        return a
    raise TagError(f"cannot add fields tagged {a!r} and {b!r}")


def add(a: ScalarField, b: ScalarField) -> ScalarField:
    """Pointwise sum; tags must agree in direction or one side be continuous.

    The sum of two upper (resp. lower) semicontinuous functions keeps the
    tag; adding a continuous function preserves either tag.  Evaluation
    raises if the two sides contribute opposite infinities at a point.
    """
    tag = _sum_tag(a.tag, b.tag)
    dom = a.domain if a.domain is not None else b.domain

    def rule(x):
        va, vb = a(x), b(x)
        s = va + vb
        if math.isnan(s):
            raise IndeterminateSumError(f"(+inf) + (-inf) at {x!r}")
        return s

    return ScalarField(dom, rule, tag=tag)


def negate(a: ScalarField) -> ScalarField:
    flip = {TAG_UPPER: TAG_LOWER, TAG_LOWER: TAG_UPPER}
    return ScalarField(a.domain, lambda x: -a(x), tag=flip.get(a.tag, a.tag))


def compress_field(f: ScalarField) -> ScalarField:
    """Compose with the squash map; strictly increasing, so the tag holds."""
    return ScalarField(
        f.domain, lambda x: squash(f(x)), tag=f.tag, name=f"squash({f.name})" if f.name else ""
    )


# ---------------------------------------------------------------------------
# audits


@dataclass(frozen=True)
class Violation:
    """One confirmed audit failure, anchored at a grid point."""

    x: tuple
    deficit: float
    neighbor: tuple | None = None
    probe: tuple | None = None
    message: str = ""


@dataclass(frozen=True)
class AuditReport:
    kind: str
    passed: bool
    violations: tuple = ()
    checked: int = 0
    eps: float = 0.0
    notes: tuple = ()

    def __bool__(self) -> bool:
        return self.passed


def default_eps(grid: Grid, slope: float = 1.0) -> float:
    """Audit tolerance: ten grid cells of travel at the given slope bound."""
    return 10.0 * grid.max_spacing() * slope


def confirmed_edges(
    grid: Grid,
    bad: Callable[[int, int, float], float],
    mask: np.ndarray | None = None,
) -> list[tuple[int, int, float]]:
    """Directed edges whose defect persists for a second cell.

    ``bad(tail, head, spacing)`` returns a positive defect when the pair
    violates the property being audited, else a value <= 0.  An edge is
    confirmed when its continuation (the next point past ``head`` in the
    same direction, at double spacing) is missing, outside ``mask``, or
    also defective.  Single-cell defects are attributed to an exceptional
    point next door and tolerated; they vanish as the grid refines.
    """
    edges, spacing = grid.directed_edges()
    out = []
    for k in range(edges.shape[0]):
        t, h, far = map(int, edges[k])
        if mask is not None and not (mask[t] and mask[h]):
            continue
        d = bad(t, h, float(spacing[k]))
        if d <= 0:
            continue
        if far < 0 or (mask is not None and not mask[far]):
            out.append((t, h, d))
            continue
        d2 = bad(t, far, 2.0 * float(spacing[k]))
        if d2 > 0:
            out.append((t, h, d))
    return out


def semicontinuity_audit(
    f: ScalarField,
    grid: Grid,
    eps: float | None = None,
    tag: str | None = None,
    mask: np.ndarray | None = None,
) -> AuditReport:
    """Check the claimed tag of ``f`` against grid-neighbour jumps.

    Lower semicontinuity forbids neighbours dropping more than ``eps``
    below the value at a point (upper: rising above), subject to the
    two-cell confirmation rule described in the module docstring.
    A field tagged ``unknown`` makes no checkable claim and passes.
    ``mask`` restricts the sweep to a subset of grid points (used for
    per-stratum continuity checks, where the claim only holds on the
    stratum).
    """
    tag = tag or f.tag
    if eps is None:
        eps = default_eps(grid)
    if tag == TAG_UNKNOWN:
        return AuditReport(
            kind="semicontinuity:unknown",
            passed=True,
            checked=len(grid),
            eps=eps,
            notes=("no semicontinuity claim to audit",),
        )
    values = np.array(
        [f(x) if mask is None or mask[i] else 0.0
         for i, x in enumerate(grid.points)]
    )

    def jump(a: float, b: float) -> float:
        if a == b:  # covers equal infinities, where a - b is NaN
            return 0.0
        return a - b

    def drop(t: int, h: int, _s: float) -> float:
        return jump(values[t], values[h]) - eps

    def rise(t: int, h: int, _s: float) -> float:
        return jump(values[h], values[t]) - eps

    checks = []
    if tag in (TAG_LOWER, TAG_CONTINUOUS):
        checks.append(("lower", drop))
    if tag in (TAG_UPPER, TAG_CONTINUOUS):
        checks.append(("upper", rise))

    violations = []
    for label, fn in checks:
        for t, h, d in confirmed_edges(grid, fn, mask=mask):
            violations.append(
                Violation(
                    x=tuple(grid.points[t]),
                    deficit=float(d),
                    neighbor=tuple(grid.points[h]),
                    message=f"{label}-semicontinuity drop beyond eps",
                )
            )
    return AuditReport(
        kind=f"semicontinuity:{tag}",
        passed=not violations,
        violations=tuple(violations),
        checked=len(grid) if mask is None else int(np.sum(mask)),
        eps=eps,
    )


def grid_values(f, grid: Grid) -> np.ndarray:
    """Evaluate a scalar or vector rule at every grid point."""
    rows = [f(x) for x in grid.points]
    return np.asarray(rows, dtype=float)


def continuity_modulus(f, grid: Grid) -> float:
    """Largest jump of ``f`` across any adjacent grid pair."""
    vals = grid_values(f, grid)
    edges, _ = grid.directed_edges()
    if edges.shape[0] == 0:
        return 0.0
    diff = vals[edges[:, 0]] - vals[edges[:, 1]]
    if diff.ndim == 1:
        return float(np.max(np.abs(diff)))
    return float(np.max(np.linalg.norm(diff, axis=1)))


def modulus_ratios(
    f, domain: Domain, per_axis: int, halvings: int = 2
) -> list[float | None]:
    """Modulus ratios across successive grid halvings.

    ``None`` marks a step where both moduli sit below the noise floor
    (1e-12): a locally constant field has nothing left to shrink.
    """
    grid = Grid(domain, per_axis)
    mods = [continuity_modulus(f, grid)]
    for _ in range(halvings):
        grid = grid.refined()
        mods.append(continuity_modulus(f, grid))
    out: list[float | None] = []
    for coarse, fine in zip(mods, mods[1:]):
        if coarse <= 1e-12 and fine <= 1e-12:
            out.append(None)
        else:
            out.append(fine / coarse if coarse > 0 else math.inf)
    return out
