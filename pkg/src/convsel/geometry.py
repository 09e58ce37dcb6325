"""Nonempty closed convex bodies in R^m and Euclidean projection onto them.

Three variants cover everything the selection pipelines need: intervals
(m = 1, endpoints may be infinite), balls, and H-polytopes
``{y : A y <= b}``.  Intervals and balls project in closed form;
polytopes run Dykstra's alternating projections over their halfspaces.
Emptiness of a polytope is decided once at construction by linear
programming, so downstream code can treat every constructed body as a
value of a set-valued map with nonempty closed convex values.
"""

from __future__ import annotations

import abc
import math

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DimensionMismatchError,
    InfeasibleBodyError,
    ProjectionError,
    UnboundedBodyError,
)

#: Dykstra iteration budget and movement tolerance.
MAX_PROJECTION_SWEEPS = 10_000
PROJECTION_TOL = 1e-10

#: Default membership slack for ``contains``.
CONTAINS_TOL = 1e-9


class ConvexBody(abc.ABC):
    """A nonempty closed convex subset of R^m."""

    dim: int

    @abc.abstractmethod
    def project_many(self, Z: np.ndarray) -> np.ndarray:
        """Euclidean projection of each row of ``Z`` (shape (N, m))."""

    @abc.abstractmethod
    def contains_many(self, Y: np.ndarray, tol: float = CONTAINS_TOL) -> np.ndarray:
        """Boolean membership mask for each row of ``Y``."""

    @abc.abstractmethod
    def translate(self, c) -> "ConvexBody":
        """The body shifted by ``c`` (feasibility is preserved, no re-check)."""

    @abc.abstractmethod
    def coord_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Componentwise (inf, sup) over the body; +-inf where unbounded."""

    @abc.abstractmethod
    def boundary_margin(self, y) -> float:
        """Signed distance from ``y`` to the boundary: > 0 strictly inside,
        < 0 outside, 0 on the boundary (and everywhere on flat bodies)."""

    def _check_dim(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected point of shape ({self.dim},), got {y.shape}"
            )
        return y

    def contains(self, y, tol: float = CONTAINS_TOL) -> bool:
        y = self._check_dim(y)
        return bool(self.contains_many(y.reshape(1, -1), tol)[0])

    def project(self, z) -> np.ndarray:
        z = self._check_dim(z)
        return self.project_many(z.reshape(1, -1))[0]

    def least_norm(self) -> np.ndarray:
        """The unique point of minimal Euclidean norm."""
        return self.project(np.zeros(self.dim))

    def distance(self, z) -> float:
        z = self._check_dim(z)
        return float(np.linalg.norm(self.project(z) - z))

    def sample_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.coord_bounds()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise UnboundedBodyError(
                "sampling an unbounded body needs a declared bounding box"
            )
        return lo, hi


class Interval(ConvexBody):
    """A closed interval of the extended line (m = 1)."""

    def __init__(self, lo: float, hi: float):
        self.lo = float(lo)
        self.hi = float(hi)
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise InfeasibleBodyError("interval endpoint is NaN")
        if self.lo > self.hi:
            raise InfeasibleBodyError(f"interval has lo={self.lo} > hi={self.hi}")
        self.dim = 1

    def project_many(self, Z: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(Z, dtype=float), self.lo, self.hi)

    def contains_many(self, Y, tol: float = CONTAINS_TOL) -> np.ndarray:
        Y = np.asarray(Y, dtype=float).reshape(-1, 1)
        return ((Y[:, 0] >= self.lo - tol) & (Y[:, 0] <= self.hi + tol))

    def translate(self, c) -> "Interval":
        c = float(np.asarray(c).reshape(-1)[0])
        return Interval(self.lo + c, self.hi + c)

    def coord_bounds(self):
        return np.array([self.lo]), np.array([self.hi])

    def boundary_margin(self, y) -> float:
        y = float(self._check_dim(y)[0])
        return min(y - self.lo, self.hi - y)

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"


class Ball(ConvexBody):
    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float).reshape(-1)
        self.radius = float(radius)
        if self.radius < 0:
            raise InfeasibleBodyError(f"negative radius {self.radius}")
        if not np.all(np.isfinite(self.center)) or not math.isfinite(self.radius):
            raise InfeasibleBodyError("ball parameters must be finite")
        self.dim = self.center.shape[0]

    def project_many(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        D = Z - self.center
        norms = np.linalg.norm(D, axis=1)
        scale = np.ones_like(norms)
        out = norms > self.radius
        scale[out] = self.radius / norms[out]
        return self.center + D * scale[:, None]

    def contains_many(self, Y, tol: float = CONTAINS_TOL) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return np.linalg.norm(Y - self.center, axis=1) <= self.radius + tol

    def translate(self, c) -> "Ball":
        return Ball(self.center + np.asarray(c, dtype=float), self.radius)

    def coord_bounds(self):
        return self.center - self.radius, self.center + self.radius

    def boundary_margin(self, y) -> float:
        y = self._check_dim(y)
        return self.radius - float(np.linalg.norm(y - self.center))

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class HPolytope(ConvexBody):
    """Intersection of halfspaces ``{y : A y <= b}``, checked nonempty.

    Zero rows of ``A`` are resolved at construction: a vacuous constraint
    (``0 <= b_i`` with ``b_i >= 0``) is dropped, an impossible one raises.
    Projection runs Dykstra's cyclic scheme batched over query points and
    raises :class:`ProjectionError` if the sweep budget runs out while an
    iterate still violates a constraint.  ``bounding_box`` is optional and
    only consulted by sampling oracles when a coordinate is unbounded.
    """

    def __init__(self, A, b, bounding_box=None, _validated: bool = False):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise DimensionMismatchError(
                f"A has {A.shape[0]} rows but b has {b.shape[0]} entries"
            )
        norms = np.linalg.norm(A, axis=1)
        zero = norms == 0.0
        if np.any(zero):
            if np.any(b[zero] < 0):
                raise InfeasibleBodyError("constraint 0 <= b with b < 0")
            A, b, norms = A[~zero], b[~zero], norms[~zero]
        self.A = A
        self.b = b
        self.dim = A.shape[1]
        self.bounding_box = bounding_box
        self._norms = norms
        self._norms2 = norms**2
        if not _validated:
            self._check_feasible()

    def _check_feasible(self):
        if self.A.shape[0] == 0:
            return
        res = linprog(
            c=np.zeros(self.dim),
            A_ub=self.A,
            b_ub=self.b,
            bounds=[(None, None)] * self.dim,
            method="highs",
        )
        if res.status == 2:
            raise InfeasibleBodyError("halfspace system has no solution")
        if not res.success:
            raise InfeasibleBodyError(f"feasibility check failed: {res.message}")

    def project_many(self, Z: np.ndarray) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if self.A.shape[0] == 0:
            return Z.copy()
        if np.all(self.A @ Z.T - self.b[:, None] <= 0):
            return Z.copy()
        Y = Z.copy()
        corr = np.zeros((self.A.shape[0],) + Y.shape)
        for _ in range(MAX_PROJECTION_SWEEPS):
            start = Y.copy()
            corr_start = corr.copy()
            for i in range(self.A.shape[0]):
                W = Y + corr[i]
                t = (W @ self.A[i] - self.b[i]) / self._norms2[i]
                np.maximum(t, 0.0, out=t)
                Y = W - t[:, None] * self.A[i]
                corr[i] = W - Y
            # the iterate alone can revisit a point mid-convergence while
            # the corrections still churn; both must settle before stopping
            move = max(
                float(np.max(np.abs(Y - start))),
                float(np.max(np.abs(corr - corr_start))),
            )
            if move < PROJECTION_TOL:
                break
        worst = float(np.max((self.A @ Y.T - self.b[:, None]) / self._norms[:, None]))
        if worst > 1e-7:
            raise ProjectionError(
                f"projection did not converge (residual {worst:.3e})"
            )
        return Y

    def contains_many(self, Y, tol: float = CONTAINS_TOL) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.A.shape[0] == 0:
            return np.ones(Y.shape[0], dtype=bool)
        slack = self.b[:, None] - self.A @ Y.T
        return np.all(slack >= -tol * np.maximum(1.0, self._norms)[:, None], axis=0)

    def translate(self, c) -> "HPolytope":
        c = np.asarray(c, dtype=float)
        box = self.bounding_box
        if box is not None:
            box = (box[0] + c, box[1] + c)
        return HPolytope(self.A, self.b + self.A @ c, bounding_box=box, _validated=True)

    def coord_bounds(self):
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            for sign, slot in ((1.0, lo), (-1.0, hi)):
                res = linprog(
                    c=sign * e,
                    A_ub=self.A,
                    b_ub=self.b,
                    bounds=[(None, None)] * self.dim,
                    method="highs",
                )
                if res.status == 3:
                    slot[j] = -math.inf if sign > 0 else math.inf
                elif res.success:
                    slot[j] = sign * res.fun
                else:
                    raise ProjectionError(f"bounds LP failed: {res.message}")
        return lo, hi

    def boundary_margin(self, y) -> float:
        y = self._check_dim(y)
        if self.A.shape[0] == 0:
            return math.inf
        slack = (self.b - self.A @ y) / self._norms
        worst = float(np.min(slack))
        if worst >= 0:
            # inside: nearest facet hyperplane realizes the boundary distance
            return worst
        return -self.distance(y)

    def sample_bounds(self):
        lo, hi = self.coord_bounds()
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            return lo, hi
        if self.bounding_box is not None:
            blo, bhi = self.bounding_box
            return np.asarray(blo, dtype=float), np.asarray(bhi, dtype=float)
        raise UnboundedBodyError(
            "sampling an unbounded polytope needs a declared bounding box"
        )

    @staticmethod
    def from_box(lo, hi) -> "HPolytope":
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        eye = np.eye(lo.shape[0])
        return HPolytope(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @staticmethod
    def intersect(p: "HPolytope", q: "HPolytope") -> "HPolytope":
        if p.dim != q.dim:
            raise DimensionMismatchError("cannot intersect bodies of different dim")
        return HPolytope(np.vstack([p.A, q.A]), np.concatenate([p.b, q.b]))

    def __repr__(self):
        return f"HPolytope({self.A.shape[0]} halfspaces, dim={self.dim})"


# -- functional aliases matching the rest of the package's call style -------


def contains(body: ConvexBody, y, tol: float = CONTAINS_TOL) -> bool:
    return body.contains(y, tol)


def distance(body: ConvexBody, y) -> float:
    return body.distance(y)


def least_norm_point(body: ConvexBody) -> np.ndarray:
    return body.least_norm()


def coord_bounds(body: ConvexBody, axis: int) -> tuple[float, float]:
    lo, hi = body.coord_bounds()
    if not 0 <= axis < body.dim:
        raise DimensionMismatchError(f"axis {axis} out of range for dim {body.dim}")
    return float(lo[axis]), float(hi[axis])

def interior_margin(body: ConvexBody, y) -> float:
    return body.boundary_margin(y)


def sample(body: ConvexBody, k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` feasible points: rejection inside the body's bounding box,
    topped up with projections of leftover proposals when the body is thin
    relative to its box."""
    lo, hi = body.sample_bounds()
    span = np.maximum(hi - lo, 0.0)
    batch = max(4 * k, 64)
    hits = np.empty((0, body.dim))
    for _ in range(40):
        Z = lo + span * rng.random((batch, body.dim))
        inside = body.contains_many(Z)
        hits = np.vstack([hits, Z[inside]])
        if hits.shape[0] >= k:
            return hits[:k]
    Z = lo + span * rng.random((k - hits.shape[0], body.dim))
    return np.vstack([hits, body.project_many(Z)])[:k]
