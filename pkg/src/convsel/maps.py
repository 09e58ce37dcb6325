"""Set-valued maps T: E => R^m with convex-body values, and their audits.

A map is an ordered list of (region, body rule) pieces over a domain;
the first matching piece wins, which makes evaluation deterministic on
region overlaps.  Lower semicontinuity and stratification structure are
declared by the caller and audited on grids, never proven.  All audits
use the package-wide two-cell confirmation rule (see ``fields``): a
defect against a single neighbouring cell is tolerated when the next
cell in the same direction recovers, since that is the signature of an
exceptional point sitting next to the probe rather than of a genuine
violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DimensionMismatchError,
    StratificationError,
    TagError,
    UncoveredPointError,
)
from .fields import (
    AuditReport,
    DEFAULT_SEED,
    Domain,
    Grid,
    ScalarField,
    TAG_LOWER,
    TAG_UNKNOWN,
    TAG_UPPER,
    VectorField,
    Violation,
    default_eps,
)
from .geometry import Ball, ConvexBody, HPolytope, Interval, sample


@dataclass(frozen=True)
class Region:
    """A predicate over domain points, with a label for reports."""

    predicate: Callable[[np.ndarray], bool]
    label: str = ""

    def __call__(self, x) -> bool:
        return bool(self.predicate(np.asarray(x, dtype=float)))

    def mask(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.fromiter((self(x) for x in X), dtype=bool, count=X.shape[0])


EVERYWHERE = Region(lambda x: True, "everywhere")


def region_not(r: Region) -> Region:
    return Region(lambda x: not r(x), f"not({r.label})")


def region_and(*rs: Region) -> Region:
    return Region(lambda x: all(r(x) for r in rs), " & ".join(r.label for r in rs))


def region_or(*rs: Region) -> Region:
    return Region(lambda x: any(r(x) for r in rs), " | ".join(r.label for r in rs))


def boundary_cloud(region: Region, grid: Grid) -> np.ndarray:
    """Grid realization of the boundary of an open region: the points
    outside it that touch it along a grid edge."""
    inside = region.mask(grid.points)
    edges, _ = grid.directed_edges()
    flag = np.zeros(len(grid), dtype=bool)
    for t, h, _far in edges:
        if not inside[t] and inside[h]:
            flag[t] = True
    return grid.points[flag]


@dataclass(frozen=True)
class SetValuedMap:
    domain: Domain
    output_dim: int
    pieces: tuple
    declared_lsc: bool = False
    declared_continuous: bool = False
    name: str = ""

    def evaluate(self, x) -> ConvexBody:
        x = np.asarray(x, dtype=float)
        for region, rule in self.pieces:
            if region(x):
                body = rule(x)
                if body.dim != self.output_dim:
                    raise DimensionMismatchError(
                        f"piece produced dim {body.dim}, map has m={self.output_dim}"
                    )
                return body
        raise UncoveredPointError(f"no piece covers {x.tolist()}")

    def __call__(self, x) -> ConvexBody:
        return self.evaluate(x)


def constant_map(domain: Domain, body: ConvexBody, name: str = "") -> SetValuedMap:
    return SetValuedMap(
        domain,
        body.dim,
        ((EVERYWHERE, lambda x: body),),
        declared_lsc=True,
        declared_continuous=True,
        name=name,
    )


def shift(map_: SetValuedMap, f) -> SetValuedMap:
    """The map x -> {y - f(x) : y in T(x)}; preserves declared tags.

    ``f`` may be a VectorField (must be tagged continuous), a plain
    callable, or a constant vector.
    """
    if isinstance(f, VectorField):
        if f.tag != "continuous":
            raise TagError("shift needs a continuous vector field")
        if f.dim != map_.output_dim:
            raise DimensionMismatchError(
                f"shift field has dim {f.dim}, map has m={map_.output_dim}"
            )
        fv = f
    elif callable(f):
        fv = f
    else:
        c = np.asarray(f, dtype=float).reshape(-1)
        if c.shape != (map_.output_dim,):
            raise DimensionMismatchError(
                f"shift vector has shape {c.shape}, map has m={map_.output_dim}"
            )
        fv = lambda x: c

    pieces = tuple(
        (region, lambda x, rule=rule: rule(x).translate(-np.asarray(fv(x), dtype=float)))
        for region, rule in map_.pieces
    )
    return SetValuedMap(
        map_.domain,
        map_.output_dim,
        pieces,
        declared_lsc=map_.declared_lsc,
        declared_continuous=map_.declared_continuous,
        name=f"{map_.name}-shifted" if map_.name else "",
    )


def envelopes(map_: SetValuedMap) -> tuple[ScalarField, ScalarField]:
    """(inf T, sup T) for m = 1, tagged upper-sc / lower-sc when the map
    is declared lsc (that implication is the content of the envelope
    semicontinuity result; the tags still get audited downstream)."""
    if map_.output_dim != 1:
        raise DimensionMismatchError("envelopes need a map into R^1")

    def lo_rule(x):
        lo, _ = map_.evaluate(x).coord_bounds()
        return float(lo[0])

    def hi_rule(x):
        _, hi = map_.evaluate(x).coord_bounds()
        return float(hi[0])

    tag_lo = TAG_UPPER if map_.declared_lsc else TAG_UNKNOWN
    tag_hi = TAG_LOWER if map_.declared_lsc else TAG_UNKNOWN
    f = ScalarField(map_.domain, lo_rule, tag=tag_lo, name=f"inf({map_.name})")
    g = ScalarField(map_.domain, hi_rule, tag=tag_hi, name=f"sup({map_.name})")
    return f, g


# ---------------------------------------------------------------------------
# probing


def _extreme_points(body: ConvexBody) -> list[np.ndarray]:
    """Points attaining each finite coordinate bound (the probe anchors)."""
    out: list[np.ndarray] = []
    if isinstance(body, Interval):
        for v in (body.lo, body.hi):
            if math.isfinite(v):
                out.append(np.array([v]))
        return out
    if isinstance(body, Ball):
        for j in range(body.dim):
            e = np.zeros(body.dim)
            e[j] = body.radius
            out.append(body.center - e)
            out.append(body.center + e)
        return out
    if isinstance(body, HPolytope):
        for j in range(body.dim):
            e = np.zeros(body.dim)
            e[j] = 1.0
            for sign in (1.0, -1.0):
                res = linprog(
                    c=sign * e,
                    A_ub=body.A,
                    b_ub=body.b,
                    bounds=[(None, None)] * body.dim,
                    method="highs",
                )
                if res.success:
                    out.append(np.asarray(res.x, dtype=float))
        return out
    return out


def probe_points(body: ConvexBody, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Deterministic probes of a body: coordinate extremes, then the
    least-norm point, then seeded interior samples; padded by repetition
    when the body cannot be sampled (unbounded without a box)."""
    pts = _extreme_points(body)
    pts.append(body.least_norm())
    if len(pts) < count:
        try:
            extra = sample(body, count - len(pts), rng)
            pts.extend(np.asarray(extra))
        except Exception:
            pass
    while len(pts) < count:
        pts.append(pts[-1].copy())
    return pts[:count]


def graph_sample(
    map_: SetValuedMap, grid: Grid, per_point: int, seed: int = DEFAULT_SEED
) -> list[tuple[np.ndarray, np.ndarray]]:
    """``per_point`` members of T(x) for every grid x, deterministically."""
    if per_point < 1:
        raise ValueError("per_point must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for x in grid.points:
        body = map_.evaluate(x)
        for y in probe_points(body, per_point, rng):
            out.append((x.copy(), np.asarray(y, dtype=float)))
    return out


# ---------------------------------------------------------------------------
# audits


def _distance_to(body: ConvexBody, probes: np.ndarray) -> np.ndarray:
    proj = body.project_many(probes)
    return np.linalg.norm(proj - probes, axis=1)


def lsc_audit(
    map_: SetValuedMap,
    grid: Grid,
    eps: float | None = None,
    slope: float = 1.0,
    interior_probes: int = 3,
    mask: np.ndarray | None = None,
    kind: str = "lsc",
    seed: int = DEFAULT_SEED,
) -> AuditReport:
    """Grid audit of lower semicontinuity.

    For every grid point x0 and probe y0 of T(x0), each grid neighbour x
    must have distance(T(x), y0) within eps plus a spacing-proportional
    slope allowance.  Defects are confirmed against the next cell in the
    same direction before being reported.
    """
    if eps is None:
        eps = default_eps(grid)
    pts = grid.points
    n_pts = pts.shape[0]
    bodies = [map_.evaluate(x) for x in pts]
    rng = np.random.default_rng(seed)
    probe_count = 2 * map_.output_dim + 1 + interior_probes
    probes = [
        np.asarray(probe_points(b, probe_count, rng), dtype=float) for b in bodies
    ]
    edges, spacing = grid.directed_edges()
    violations = []
    for k in range(edges.shape[0]):
        t, h, far = map(int, edges[k])
        if mask is not None and not (mask[t] and mask[h]):
            continue
        s = float(spacing[k])
        d = _distance_to(bodies[h], probes[t]) - (eps + s * slope)
        bad = np.nonzero(d > 0)[0]
        if bad.size == 0:
            continue
        if far >= 0 and (mask is None or mask[far]):
            d2 = _distance_to(bodies[far], probes[t][bad]) - (eps + 2 * s * slope)
            bad = bad[d2 > 0]
        for j in bad:
            violations.append(
                Violation(
                    x=tuple(pts[t]),
                    deficit=float(d[j]),
                    neighbor=tuple(pts[h]),
                    probe=tuple(probes[t][j]),
                    message="neighbour body stays far from a probe point",
                )
            )
    return AuditReport(
        kind=kind,
        passed=not violations,
        violations=tuple(violations),
        checked=n_pts,
        eps=eps,
    )


def continuity_audit(
    map_: SetValuedMap,
    grid: Grid,
    eps: float | None = None,
    slope: float = 1.0,
    region: Region | None = None,
    seed: int = DEFAULT_SEED,
) -> AuditReport:
    """Two-sided audit (the directed-edge sweep covers both directions,
    which on grids is the closed-graph check on top of lsc), optionally
    restricted to a region — used per stratum by the selection drivers."""
    mask = region.mask(grid.points) if region is not None else None
    report = lsc_audit(
        map_, grid, eps=eps, slope=slope, mask=mask, kind="continuity", seed=seed
    )
    if region is not None:
        return AuditReport(
            kind=f"continuity[{region.label}]",
            passed=report.passed,
            violations=report.violations,
            checked=int(mask.sum()) if mask is not None else report.checked,
            eps=report.eps,
        )
    return report


@dataclass(frozen=True)
class Stratification:
    """An ordered partition C_1, ..., C_k of the domain, earliest first.

    The audit enforces the two structural facts the selection recursion
    leans on: every grid point belongs to exactly one stratum, and each
    C_j is relatively open in C_j ∪ ... ∪ C_k (no grid point of C_j is
    wedged against a persistently later-stratum neighbour).
    """

    strata: tuple

    def __post_init__(self):
        if not self.strata:
            raise StratificationError("need at least one stratum")

    @property
    def depth(self) -> int:
        return len(self.strata)

    def classify(self, x) -> int:
        for j, region in enumerate(self.strata):
            if region(x):
                return j
        raise UncoveredPointError(f"no stratum covers {np.asarray(x).tolist()}")

    def classify_grid(self, grid: Grid) -> np.ndarray:
        return np.fromiter(
            (self.classify(x) for x in grid.points), dtype=int, count=len(grid)
        )

    def tail_region(self, j: int) -> Region:
        """C_j ∪ ... ∪ C_k as a single region."""
        return region_or(*self.strata[j:])


def stratification_audit(strat: Stratification, grid: Grid) -> AuditReport:
    pts = grid.points
    violations = []
    counts = np.zeros(len(grid), dtype=int)
    for region in strat.strata:
        counts += region.mask(pts).astype(int)
    for i in np.nonzero(counts != 1)[0]:
        word = "no stratum" if counts[i] == 0 else f"{counts[i]} strata"
        violations.append(
            Violation(x=tuple(pts[i]), deficit=float(abs(counts[i] - 1)),
                      message=f"grid point matches {word}")
        )
    if violations:
        return AuditReport(
            kind="stratification", passed=False, violations=tuple(violations),
            checked=len(grid),
        )
    cls = strat.classify_grid(grid)
    edges, _ = grid.directed_edges()
    for k in range(edges.shape[0]):
        t, h, far = map(int, edges[k])
        j = int(cls[t])
        if cls[h] <= j:  # earlier stratum or same: no constraint broken
            continue
        if far >= 0 and cls[far] <= j:
            continue  # single-cell contact with a later stratum: tolerated
        violations.append(
            Violation(
                x=tuple(pts[t]),
                deficit=float(cls[h] - j),
                neighbor=tuple(pts[h]),
                message=(
                    f"stratum {j} point has persistent stratum-{int(cls[h])} "
                    "neighbours (relative openness fails)"
                ),
            )
        )
    return AuditReport(
        kind="stratification",
        passed=not violations,
        violations=tuple(violations),
        checked=len(grid),
    )
