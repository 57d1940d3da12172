"""Second-order rough paths on finite time grids.

A path is stored as its sampled trace plus one second-order tensor per
adjacent grid interval.  Values of the lift over non-adjacent grid times are
reconstructed through Chen's relation

    X2[s,t] = X2[s,u] + X2[u,t] + dX[s,u] (x) dX[u,t]

(symmetrised tensor product for reduced lifts), so storage is O(n) while any
pair is still available exactly.  All tensor norms in this module are the max
absolute entry.

The p-variation here is always the grid p-variation: the supremum runs over
sub-partitions of the sample points, which is the only observable quantity
for sampled data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridError

_TIME_ATOL = 1e-12


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def maxabs(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


class TimeGrid:
    """Strictly increasing times on [0, T] with times[0] = 0."""

    def __init__(self, times):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise DomainError("a grid needs at least two time points")
        if times[0] != 0.0:
            raise DomainError("grid must start at time 0")
        if np.any(np.diff(times) <= 0.0):
            raise DomainError("grid times must be strictly increasing")
        self.times = times
        self.times.setflags(write=False)

    def __len__(self) -> int:
        return self.times.size

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def mesh(self) -> float:
        return float(np.max(np.diff(self.times)))

    def index_of(self, t: float) -> int:
        """Index of a grid time; non-grid times are a domain error."""
        k = int(np.searchsorted(self.times, t))
        tol = _TIME_ATOL * max(1.0, self.horizon)
        for j in (k - 1, k, k + 1):
            if 0 <= j < len(self) and abs(self.times[j] - t) <= tol:
                return j
        raise GridError(f"time {t!r} is not a grid point")

    def same_as(self, other: "TimeGrid") -> bool:
        return len(self) == len(other) and bool(np.array_equal(self.times, other.times))


def uniform_grid(horizon: float, n_steps: int) -> TimeGrid:
    if n_steps < 1:
        raise DomainError("need at least one step")
    return TimeGrid(np.linspace(0.0, horizon, n_steps + 1))


class TracePath:
    """Sampled d-dimensional path on a grid. X[s,t] means X_t - X_s."""

    def __init__(self, grid: TimeGrid, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != len(grid):
            raise GridError("one value per grid time required")
        self.grid = grid
        self.values = values
        self.values.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def increment(self, s: float, t: float) -> np.ndarray:
        i, j = self.grid.index_of(s), self.grid.index_of(t)
        if i > j:
            raise DomainError("need s <= t")
        return self.values[j] - self.values[i]

    def scalar(self) -> np.ndarray:
        if self.dim != 1:
            raise DomainError("path is not one-dimensional")
        return self.values[:, 0]


class BracketPath:
    """Running symmetric bracket tensors, zero at time 0, one per grid time."""

    def __init__(self, grid: TimeGrid, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None, None]
        if values.ndim != 3 or values.shape[0] != len(grid) or values.shape[1] != values.shape[2]:
            raise GridError("bracket needs one square tensor per grid time")
        scale = max(1.0, maxabs(values))
        if maxabs(values[0]) > 1e-12 * scale:
            raise DomainError("bracket must start at zero")
        if maxabs(values - _sym(values)) > 1e-12 * scale:
            raise DomainError("bracket values must be symmetric")
        self.grid = grid
        self.values = values
        self.values.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)


@dataclass
class RoughPath:
    """Trace plus per-interval lift increments, recombined through Chen."""

    trace: TracePath
    lift_increments: np.ndarray
    kind: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lift_increments = np.asarray(self.lift_increments, dtype=float)
        n, d = self.trace.values.shape
        if self.lift_increments.shape != (n - 1, d, d):
            raise GridError("need one d x d lift increment per adjacent interval")
        if self.kind == "reduced":
            defect = maxabs(self.lift_increments - _sym(self.lift_increments))
            if defect > 1e-12 * max(1.0, maxabs(self.lift_increments)):
                raise DomainError("reduced lifts must be symmetric")
        self.lift_increments.setflags(write=False)
        self._prefix = None

    @property
    def grid(self) -> TimeGrid:
        return self.trace.grid

    @property
    def dim(self) -> int:
        return self.trace.dim

    @property
    def reduced(self) -> bool:
        return self.kind == "reduced"

    def _cross(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        outer = np.einsum("...a,...b->...ab", a, b)
        return _sym(outer) if self.reduced else outer

    def prefix_lifts(self) -> np.ndarray:
        """X2[0, t_k] for every k, built by folding increments left to right."""
        if self._prefix is None:
            x = self.trace.values
            d = x.shape[1]
            cross = self._cross(x[:-1] - x[0], np.diff(x, axis=0))
            out = np.concatenate([np.zeros((1, d, d)),
                                  np.cumsum(self.lift_increments + cross, axis=0)])
            out.setflags(write=False)
            self._prefix = out
        return self._prefix

    def lift_at(self, i: int, j: int) -> np.ndarray:
        """X2 between grid indices i <= j (Chen recombination of stored data)."""
        if i > j:
            raise DomainError("need s <= t")
        p = self.prefix_lifts()
        x = self.trace.values
        return p[j] - p[i] - self._cross(x[i] - x[0], x[j] - x[i])

    def lift_eval(self, s: float, t: float) -> np.ndarray:
        return self.lift_at(self.grid.index_of(s), self.grid.index_of(t))


def chen_combine(rp_like_reduced: bool, x_su, x_ut, inc_su, inc_ut) -> np.ndarray:
    """One Chen step: combine lifts over [s,u] and [u,t] given the trace increments."""
    outer = np.outer(inc_su, inc_ut)
    if rp_like_reduced:
        outer = _sym(outer)
    return np.asarray(x_su) + np.asarray(x_ut) + outer


def chen_defect(rp: RoughPath, s: float, u: float, t: float) -> float:
    """Max-abs deviation from Chen's relation on the triple s <= u <= t."""
    i, j, k = rp.grid.index_of(s), rp.grid.index_of(u), rp.grid.index_of(t)
    if not i <= j <= k:
        raise DomainError("need s <= u <= t")
    x = rp.trace.values
    cross = rp._cross(x[j] - x[i], x[k] - x[j])
    return maxabs(rp.lift_at(i, k) - rp.lift_at(i, j) - rp.lift_at(j, k) - cross)


def lift_eval(rp: RoughPath, s: float, t: float) -> np.ndarray:
    return rp.lift_eval(s, t)


# ---------------------------------------------------------------------------
# lift constructions


def geometric_lift(trace: TracePath) -> RoughPath:
    """Canonical lift of the piecewise-linear interpolation of the samples.

    On a linear segment the second iterated integral is exactly
    (1/2) dX (x) dX.
    """
    dx = np.diff(trace.values, axis=0)
    lifts = 0.5 * np.einsum("ka,kb->kab", dx, dx)
    return RoughPath(trace, lifts, kind="geometric")


def brownian_lift(trace: TracePath) -> RoughPath:
    """Geometric lift minus (1/2)(t-s) I per interval.

    The correction makes the rough bracket equal t.I, the bracket of
    Ito-enhanced Brownian motion, whatever the trace is.
    """
    g = geometric_lift(trace)
    dt = np.diff(trace.grid.times)
    eye = np.eye(trace.dim)
    lifts = g.lift_increments - 0.5 * dt[:, None, None] * eye
    return RoughPath(trace, lifts, kind="brownian")


def ito_lift_brownian(trace: TracePath, refined: TracePath | None = None,
                      subgrid_factor: int = 16) -> RoughPath:
    """Ito enhancement of a Brownian sample.

    d = 1 is exact: X2[s,t] = (W[s,t]^2 - (t-s)) / 2, which satisfies Chen
    identically.  For d >= 2 the diagonal uses the same exact formula and the
    off-diagonal entries are left-point Riemann sums over a refinement of
    each interval, which the generator must supply (``refined`` holds
    ``subgrid_factor`` sub-steps per grid interval).
    """
    d = trace.dim
    dt = np.diff(trace.grid.times)
    dx = np.diff(trace.values, axis=0)
    if d == 1:
        lifts = (0.5 * (dx[:, 0] ** 2 - dt))[:, None, None]
        return RoughPath(trace, lifts, kind="ito")
    if refined is None:
        raise DomainError("d >= 2 Ito lifts need the refined trace from the generator")
    m = subgrid_factor
    fine = refined.values
    if fine.shape[0] != (len(trace.grid) - 1) * m + 1:
        raise GridError("refined trace does not match subgrid_factor")
    if maxabs(fine[::m] - trace.values) > 1e-12 * max(1.0, maxabs(trace.values)):
        raise GridError("refined trace disagrees with the coarse trace")
    lifts = np.empty((len(dt), d, d))
    for k in range(len(dt)):
        seg = fine[k * m:(k + 1) * m + 1]
        rel = seg[:-1] - seg[0]
        dseg = np.diff(seg, axis=0)
        lifts[k] = np.einsum("ka,kb->ab", rel, dseg)
    idx = np.arange(d)
    lifts[:, idx, idx] = 0.5 * (dx ** 2 - dt[:, None])
    rp = RoughPath(trace, lifts, kind="ito")
    rp.meta["subgrid_factor"] = m
    return rp


def reduced_lift_from_bracket(trace: TracePath, bracket: BracketPath) -> RoughPath:
    """Reduced lift X2[s,t] = (dX (x) dX - dgamma) / 2 with prescribed bracket.

    Plugging into bracket = dX (x) dX - 2 sym(X2) returns gamma exactly, so
    the round trip through ``rough_bracket`` is an identity up to rounding.
    """
    if not trace.grid.same_as(bracket.grid):
        raise GridError("trace and bracket must share a grid")
    if bracket.dim != trace.dim:
        raise DomainError("bracket dimension must match the trace")
    dx = np.diff(trace.values, axis=0)
    dgam = bracket.increments()
    lifts = 0.5 * (np.einsum("ka,kb->kab", dx, dx) - dgam)
    return RoughPath(trace, lifts, kind="reduced")


def rough_bracket(rp: RoughPath) -> BracketPath:
    """Running bracket dX(0,t) (x) dX(0,t) - 2 sym(X2[0,t])."""
    x = rp.trace.values - rp.trace.values[0]
    outer = np.einsum("ka,kb->kab", x, x)
    vals = outer - 2.0 * _sym(rp.prefix_lifts())
    return BracketPath(rp.grid, vals)


# ---------------------------------------------------------------------------
# p-variation machinery


def p_variation(values, p: float) -> float:
    """Grid p-variation of a sampled path.

    Exact supremum over sub-partitions of the sample points via the dynamic
    programme V[j] = max_{i<j} V[i] + |x_j - x_i|^p, returned as V[n-1]^(1/p).
    Vector values use the max-abs norm.
    """
    if p < 1.0:
        raise DomainError("p-variation needs p >= 1")
    x = np.asarray(values, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise DomainError("need at least two points")
    best = np.zeros(n)
    for j in range(1, n):
        dist = np.max(np.abs(x[:j] - x[j]), axis=1)
        best[j] = np.max(best[:j] + dist ** p)
    return float(best[-1] ** (1.0 / p))


def two_param_p_variation(r_fn, n_points: int, p: float, exact_limit: int = 256,
                          max_sweeps: int = 200) -> float:
    """Grid p-variation norm of a two-parameter quantity R(i, j).

    ``r_fn`` maps a pair of grid indices i < j to a scalar/array value.  The
    supremum runs over partitions made of grid points.  Up to ``exact_limit``
    points the O(n^2) dynamic programme is exact; beyond that a greedy merge
    pass returns a certified lower bound (each merge only ever increases the
    sum, and the single-interval partition is always included).
    """
    if p < 1.0:
        raise DomainError("p-variation needs p >= 1")
    if n_points < 2:
        raise DomainError("need at least two points")

    def w(i, j):
        return maxabs(r_fn(i, j)) ** p

    if n_points <= exact_limit:
        best = np.zeros(n_points)
        for j in range(1, n_points):
            best[j] = max(best[i] + w(i, j) for i in range(j))
        return float(best[-1] ** (1.0 / p))

    # greedy merge from the finest partition; local improvements only
    idx = list(range(n_points))
    terms = [w(idx[k], idx[k + 1]) for k in range(len(idx) - 1)]
    for _ in range(max_sweeps):
        removed = False
        k = 1
        while k < len(idx) - 1:
            merged = w(idx[k - 1], idx[k + 1])
            if merged > terms[k - 1] + terms[k] + 1e-300:
                del idx[k]
                terms[k - 1:k + 1] = [merged]
                removed = True
            else:
                k += 1
        if not removed:
            break
    total = max(sum(terms), w(0, n_points - 1))
    return float(total ** (1.0 / p))


def _trace_norm(rp: RoughPath, p: float, lo: int = 0, hi: int | None = None) -> float:
    hi = len(rp.grid) - 1 if hi is None else hi
    return p_variation(rp.trace.values[lo:hi + 1], p)


def _lift_norm(rp: RoughPath, p_half: float, lo: int = 0, hi: int | None = None,
               exact_limit: int = 256) -> float:
    hi = len(rp.grid) - 1 if hi is None else hi
    return two_param_p_variation(lambda i, j: rp.lift_at(lo + i, lo + j),
                                 hi - lo + 1, p_half, exact_limit=exact_limit)


def homogeneous_norm(rp: RoughPath, p: float, exact_limit: int = 256) -> float:
    """||X||_{p-var} + sqrt(||X2||_{p/2-var}) over the whole grid."""
    if p < 1.0:
        raise DomainError("need p >= 1")
    return _trace_norm(rp, p) + np.sqrt(_lift_norm(rp, p / 2.0, exact_limit=exact_limit))


def rough_distance(a: RoughPath, b: RoughPath, p: float, exact_limit: int = 256) -> float:
    """Inhomogeneous p-variation distance between two lifts on one grid."""
    if not a.grid.same_as(b.grid):
        raise GridError("rough paths must share a grid for distances")
    trace_part = p_variation(a.trace.values - b.trace.values, p)
    lift_part = two_param_p_variation(lambda i, j: a.lift_at(i, j) - b.lift_at(i, j),
                                      len(a.grid), p / 2.0, exact_limit=exact_limit)
    return float(trace_part + lift_part)
