"""Continuous interpolation between an upper-sc floor and a lower-sc ceiling.

Given f upper semicontinuous, g lower semicontinuous with f <= g, the
pipeline produces a continuous h with f <= h <= g, strictly between them
wherever f < g.  Everything runs in compressed coordinates: values are
squashed onto [-1, 1] first (infinities land exactly on the endpoints),
and the final answer is clamped one strictness margin inside the
endpoints before decompressing, so h is finite even against infinite
envelopes.

The recursion follows the user stratification last-to-first.  On the
final stratum the answer is the midpoint (f + g)/2.  Each earlier level
extends the partial answer from the later strata to everything (h1),
subtracts it, glues the zero function across the equality locus (h2/h3),
nudges the result strictly inside the envelopes on the sign regions
(h4), extends again (h5), and finally damps h5 to zero on the region
where the extension escaped the envelopes (delta), which is what keeps
the glued function strictly sandwiched.

Closed sets needed by the construction (the equality locus, boundaries,
the sign regions) are realized as clouds of construction-grid points, so
the Tietze operator always extends from finite data with baked values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    EvalDomainError,
    InfeasibleBodyError,
    PostconditionError,
    StratificationError,
    UncoveredPointError,
)
from .fields import (
    AuditReport,
    Domain,
    Grid,
    STRICTNESS_MARGIN,
    ScalarField,
    TAG_CONTINUOUS,
    Violation,
    add,
    compress_field,
    constant_field,
    negate,
    semicontinuity_audit,
    unsquash,
)
from .maps import (
    Region,
    Stratification,
    boundary_cloud,
    region_not,
    region_or,
    stratification_audit,
)
from .urysohn import ClosedSet, dist_field, tietze_extend

#: Two values within this of each other count as equal when forming the
#: equality locus X = {f = g}.
EQUALITY_TOL = 1e-12

#: Gap above which the strictness preconditions/postconditions are enforced.
STRICT_GAP = 1e-9


# ---------------------------------------------------------------------------
# stage operators


def reduce_to_bounded(f: ScalarField, g: ScalarField):
    """Squash both envelopes onto [-1, 1]; tags survive (the squash map is
    a strictly increasing homeomorphism of the extended line onto it).

    Compression is applied unconditionally — one code path — so the flag
    is always True and records that the final answer must be clamped a
    strictness margin inside the endpoints and decompressed.
    """
    return compress_field(f), compress_field(g), True


def base_midpoint(f: ScalarField, g: ScalarField, domain: Domain | None = None) -> ScalarField:
    """(f + g)/2, the base-case selection; inputs must be finite."""

    def rule(x):
        vf, vg = f(x), g(x)
        if not (math.isfinite(vf) and math.isfinite(vg)):
            raise EvalDomainError(
                f"midpoint of infinite values at {np.asarray(x).tolist()}; compress first"
            )
        return 0.5 * (vf + vg)

    return ScalarField(domain or f.domain, rule, tag=TAG_CONTINUOUS, name="midpoint")


def equalizer_glue(
    f: ScalarField,
    g: ScalarField,
    U: Region,
    E: Domain,
    h_prev: ScalarField | None = None,
    grid: Grid | None = None,
):
    """Zero function on E∖U glued with the common value on X = {f = g} ∩ U.

    ``h_prev`` (the extension of the partial answer from E∖U) is
    subtracted first; the preconditions — f - h_prev <= 0 <= g - h_prev on
    E∖U, strictly where the gap is positive — are audited on ``grid``
    when one is supplied.  Returns (h2 on (E∖U) ∪ X, X).
    """
    if h_prev is None:
        h_prev = constant_field(E, 0.0)
    f1 = add(f, negate(h_prev))
    g1 = add(g, negate(h_prev))

    X = Region(
        lambda x: U(x) and abs(f1(x) - g1(x)) <= EQUALITY_TOL,
        f"equality locus in {U.label or 'U'}",
    )

    if grid is not None:
        for x in grid.points:
            if U(x):
                continue
            vf, vg = f1(x), g1(x)
            if vf > STRICT_GAP or vg < -STRICT_GAP:
                raise PostconditionError(
                    f"glue precondition f-h <= 0 <= g-h fails at {x.tolist()}: "
                    f"[{vf:.3e}, {vg:.3e}]"
                )
            if vg - vf > STRICT_GAP and not (vf < 0.0 < vg):
                raise PostconditionError(
                    f"glue strictness fails at {x.tolist()}: [{vf:.3e}, {vg:.3e}]"
                )

    def rule(x):
        if not U(x):
            return 0.0
        if X(x):
            return f1(x)
        raise UncoveredPointError(
            f"{np.asarray(x).tolist()} is outside (E∖U) ∪ X"
        )

    h2 = ScalarField(E, rule, tag=TAG_CONTINUOUS, name="equalizer-glue")
    return h2, X


def interior_adjust(
    f: ScalarField,
    g: ScalarField,
    V: Region,
    Z1: Region,
    Z2: Region,
    eta1: ScalarField,
    eta2: ScalarField,
    domain: Domain | None = None,
) -> ScalarField:
    """The strictly-inside nudge on S = Z1 ∪ Z2 ∪ (E∖V).

    Zero off V; min(f + eta1, midpoint) where the floor has reached 0
    (Z1), max(g - eta2, midpoint) where the ceiling has (Z2).  The etas
    vanish exactly on the boundary-of-V slices of Z1/Z2, which is what
    lets the three cases meet continuously.
    """

    def rule(x):
        if not V(x):
            return 0.0
        vf, vg = f(x), g(x)
        mid = 0.5 * (vf + vg)
        if Z1(x):
            return min(vf + eta1(x), mid)
        if Z2(x):
            return max(vg - eta2(x), mid)
        raise UncoveredPointError(f"{np.asarray(x).tolist()} is outside S")

    return ScalarField(domain or f.domain, rule, tag=TAG_CONTINUOUS, name="interior-adjust")


def damp_to_safe(
    h5: ScalarField,
    f: ScalarField,
    g: ScalarField,
    V: Region,
    Z1: Region,
    Z2: Region,
):
    """Final glue: h5 on S, delta * h5 on V.

    W collects the V-points where the extension h5 escaped the open
    envelope (h5 <= f or h5 >= g).  delta is 0 exactly on W and 1 exactly
    on V ∩ (Z1 ∪ Z2) ⊆ S, built as a ratio of two hinge functions whose
    zero sets are exactly those: phi_W = (min(h5-f, g-h5))⁺ vanishes
    exactly under W's condition, phi_B = (min(-f, g))⁺ vanishes exactly
    on Z1 ∪ Z2.  Both zero at one V-point would mean W meets
    V ∩ (Z1 ∪ Z2), which the construction of h4 rules out — it is
    reported as an upstream failure.  Returns (h, delta, W).
    """
    S = region_or(Z1, Z2, region_not(V))
    W = Region(
        lambda x: V(x) and (h5(x) <= f(x) or h5(x) >= g(x)),
        "escape region W",
    )

    def delta_rule(x):
        vf, vg, v5 = f(x), g(x), h5(x)
        phi_w = max(0.0, min(v5 - vf, vg - v5))
        phi_b = max(0.0, min(-vf, vg))
        tot = phi_w + phi_b
        if tot <= 0.0:
            raise PostconditionError(
                f"W meets V∩(Z1∪Z2) at {np.asarray(x).tolist()} — "
                "the interior adjustment failed upstream"
            )
        return phi_w / tot

    delta = ScalarField(f.domain, delta_rule, tag=TAG_CONTINUOUS, name="delta")

    def h_rule(x):
        if S(x):
            return h5(x)
        return delta(x) * h5(x)

    h = ScalarField(f.domain, h_rule, tag=TAG_CONTINUOUS, name="damped-glue")
    return h, delta, W


# ---------------------------------------------------------------------------
# trace and driver


@dataclass(frozen=True)
class SandwichLevel:
    stratum: str
    kind: str  # "base" or "glue"
    h0: ScalarField | None = None
    h1: ScalarField | None = None
    h2: ScalarField | None = None
    h3: ScalarField | None = None
    h4: ScalarField | None = None
    h5: ScalarField | None = None
    eta1: ScalarField | None = None
    eta2: ScalarField | None = None
    delta: ScalarField | None = None
    f_level: ScalarField | None = None
    g_level: ScalarField | None = None
    regions: dict = dc_field(default_factory=dict)
    total: ScalarField | None = None


@dataclass(frozen=True)
class SandwichTrace:
    compressed: bool
    strata: tuple
    levels: tuple
    construction_grid: Grid
    h_compressed: ScalarField | None = None

    @property
    def outer(self) -> SandwichLevel:
        return self.levels[-1]


def _eta_for(boundary: np.ndarray, Z: Region, E: Domain, name: str) -> ScalarField:
    if boundary.shape[0]:
        keep = Z.mask(boundary)
        pts = boundary[keep]
        if pts.shape[0]:
            return dist_field(ClosedSet.from_cloud(pts), E, name=name)
    # the boundary slice is empty: any positive continuous function works
    return constant_field(E, 1.0, name=name)


def _cloud_from(region: Region, grid: Grid, what: str) -> ClosedSet:
    pts = grid.points[region.mask(grid.points)]
    if pts.shape[0] == 0:
        raise StratificationError(
            f"{what} contains no construction grid point; refine the "
            "construction grid or fix the stratification"
        )
    return ClosedSet.from_cloud(pts)


def _select_level(
    f: ScalarField,
    g: ScalarField,
    strata: tuple,
    E: Domain,
    grid: Grid,
    levels: list,
) -> ScalarField:
    if len(strata) == 1:
        h0 = base_midpoint(f, g, E)
        levels.append(
            SandwichLevel(stratum=strata[0].label, kind="base", h0=h0,
                          f_level=f, g_level=g, total=h0)
        )
        return h0

    U = strata[0]
    h_rest = _select_level(f, g, strata[1:], E, grid, levels)

    rest_cloud = _cloud_from(region_not(U), grid, "the tail of the stratification")
    h1 = tietze_extend(h_rest, rest_cloud, E, name="h1")
    h2, X = equalizer_glue(f, g, U, E, h_prev=h1, grid=grid)
    glue_cloud = _cloud_from(
        region_or(region_not(U), X), grid, "(E∖U) ∪ X"
    )
    h3 = tietze_extend(h2, glue_cloud, E, name="h3")

    f2 = add(add(f, negate(h1)), negate(h3))
    g2 = add(add(g, negate(h1)), negate(h3))

    V = Region(lambda x: U(x) and not X(x), f"{U.label or 'U'} minus equality locus")
    Z1 = Region(lambda x: f2(x) >= 0.0, "floor has caught up (f2 >= 0)")
    Z2 = Region(lambda x: g2(x) <= 0.0, "ceiling has caught up (g2 <= 0)")

    boundary = boundary_cloud(V, grid)
    eta1 = _eta_for(boundary, Z1, E, "eta1")
    eta2 = _eta_for(boundary, Z2, E, "eta2")

    h4 = interior_adjust(f2, g2, V, Z1, Z2, eta1, eta2, E)
    S = region_or(Z1, Z2, region_not(V))
    s_cloud = _cloud_from(S, grid, "S = Z1 ∪ Z2 ∪ (E∖V)")
    h5 = tietze_extend(h4, s_cloud, E, name="h5")

    h_glued, delta, W = damp_to_safe(h5, f2, g2, V, Z1, Z2)
    total = add(add(h_glued, h3), h1)
    levels.append(
        SandwichLevel(
            stratum=U.label,
            kind="glue",
            h1=h1, h2=h2, h3=h3, h4=h4, h5=h5,
            eta1=eta1, eta2=eta2, delta=delta,
            f_level=f2, g_level=g2,
            regions={
                "U": U, "X": X, "V": V, "Z1": Z1, "Z2": Z2,
                "Y": Region(lambda x: f2(x) < 0.0 < g2(x), "strictly mixed sign"),
                "S": S, "W": W,
            },
            total=total,
        )
    )
    return total


def sandwich_select(
    f: ScalarField,
    g: ScalarField,
    strat: Stratification,
    resolution: int | None = None,
    check: bool = True,
):
    """Continuous h with f <= h <= g, strict wherever f < g.

    ``resolution`` is the construction grid density (points per axis)
    used to realize the pipeline's closed sets as clouds; audits of the
    result happen on whatever grid the caller chooses afterwards.
    Raises if f > g at a construction point, or when the stratification
    fails its audits (partition, relative openness, per-stratum
    continuity of the envelopes).
    """
    E = f.domain or g.domain
    if E is None:
        raise ValueError("sandwich_select needs a domain on f or g")
    if resolution is None:
        resolution = 129 if E.ambient_dim == 1 else 17
    grid = Grid(E, resolution)

    f_c, g_c, compressed = reduce_to_bounded(f, g)

    for x in grid.points:
        if f_c(x) > g_c(x) + EQUALITY_TOL:
            raise InfeasibleBodyError(
                f"empty interval: f(x) > g(x) at x={x.tolist()}"
            )

    if check:
        report = stratification_audit(strat, grid)
        if not report.passed:
            raise StratificationError(
                "stratification audit failed: "
                f"{report.violations[0].message} at {report.violations[0].x}",
            )
        for j, stratum in enumerate(strat.strata):
            mask = stratum.mask(grid.points)
            for fld, label in ((f_c, "floor"), (g_c, "ceiling")):
                rep = semicontinuity_audit(
                    fld, grid, tag=TAG_CONTINUOUS, mask=mask
                )
                if not rep.passed:
                    v = rep.violations[0]
                    raise StratificationError(
                        f"{label} is not continuous on stratum {j} "
                        f"({stratum.label!r}): jump {v.deficit:.3e} at {v.x}"
                    )
        for fld, label in ((f_c, "floor"), (g_c, "ceiling")):
            rep = semicontinuity_audit(fld, grid)
            if not rep.passed:
                v = rep.violations[0]
                raise StratificationError(
                    f"{label} fails its declared semicontinuity: "
                    f"deficit {v.deficit:.3e} at {v.x}"
                )

    levels: list[SandwichLevel] = []
    h_c = _select_level(f_c, g_c, tuple(strat.strata), E, grid, levels)

    lo = -1.0 + STRICTNESS_MARGIN
    hi = 1.0 - STRICTNESS_MARGIN

    def h_rule(x):
        return unsquash(min(max(h_c(x), lo), hi))

    h = ScalarField(E, h_rule, tag=TAG_CONTINUOUS, name="sandwich")
    trace = SandwichTrace(
        compressed=compressed,
        strata=tuple(r.label for r in strat.strata),
        levels=tuple(levels),
        construction_grid=grid,
        h_compressed=h_c,
    )
    return h, trace


def region_audit(trace: SandwichTrace, grid: Grid) -> AuditReport:
    """Re-check the non-definitional facts tying a trace's regions and
    fields together, at every grid point: S ∪ V covers, X ⊆ U, V = U∖X,
    delta lands in [0,1] with the right values on W and V∩(Z1∪Z2), W
    stays clear of V∩(Z1∪Z2), and h4 carries the advertised signs."""
    violations = []
    checked = 0
    for level in trace.levels:
        if level.kind != "glue":
            continue
        R = level.regions
        U, X, V, Z1, Z2, S, W = (
            R["U"], R["X"], R["V"], R["Z1"], R["Z2"], R["S"], R["W"]
        )
        f2, g2, h4, delta = level.f_level, level.g_level, level.h4, level.delta
        for x in grid.points:
            checked += 1
            in_v = V(x)
            if not (S(x) or in_v):
                violations.append(Violation(tuple(x), 1.0, message="S ∪ V misses a point"))
            if X(x) and not U(x):
                violations.append(Violation(tuple(x), 1.0, message="X escapes U"))
            if in_v != (U(x) and not X(x)):
                violations.append(Violation(tuple(x), 1.0, message="V is not U∖X"))
            if not in_v:
                continue
            in_b = Z1(x) or Z2(x)
            if W(x) and in_b:
                violations.append(
                    Violation(tuple(x), 1.0, message="W meets V∩(Z1∪Z2)")
                )
                continue
            d = delta(x)
            if not -1e-15 <= d <= 1.0 + 1e-15:
                violations.append(
                    Violation(tuple(x), abs(d - 0.5) - 0.5, message="delta outside [0,1]")
                )
            if in_b and d != 1.0:
                violations.append(
                    Violation(tuple(x), 1.0 - d, message="delta != 1 on V∩(Z1∪Z2)")
                )
            if W(x) and d != 0.0:
                violations.append(
                    Violation(tuple(x), d, message="delta != 0 on W")
                )
            if in_b:
                v4, vf, vg = h4(x), f2(x), g2(x)
                if not vf < v4 < vg:
                    violations.append(
                        Violation(tuple(x), max(vf - v4, v4 - vg),
                                  message="h4 not strictly inside [f2, g2] on V∩(Z1∪Z2)")
                    )
                if Z1(x) and not v4 > 0.0:
                    violations.append(
                        Violation(tuple(x), -v4, message="h4 <= 0 on Z1∩V")
                    )
                if Z2(x) and not v4 < 0.0:
                    violations.append(
                        Violation(tuple(x), v4, message="h4 >= 0 on Z2∩V")
                    )
    return AuditReport(
        kind="sandwich-regions",
        passed=not violations,
        violations=tuple(violations),
        checked=checked,
    )
