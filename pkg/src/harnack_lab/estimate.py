"""Monte Carlo estimation of semigroup and occupation functionals.

All estimators reduce per-sample value arrays ordered by stream id, so the
result is independent of how the work was batched.  Simulated terminal
states and coupled weights are cached per scenario, which doubles as a
common-random-numbers device: different test functions evaluated against
the same scenario share paths exactly.
"""

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .coupling import CouplingKind, coupled_terminals
from .errors import EstimatorError, NonConvergenceError, UnsupportedDimensionError
from .model import DEFAULT_QUADRATURE, _refining_integral
from .paths import TimeGrid, occupation_sums, terminal_states

__all__ = [
    "McEstimate",
    "KrylovParams",
    "TestFunction",
    "SpaceTimeFunction",
    "mc_semigroup",
    "weighted_semigroup",
    "entropy_weight",
    "entropy_weight_pair",
    "weight_moment",
    "krylov_functional",
    "krylov_functionals",
    "estimate_kappa",
    "default_probe_family",
    "khasminskii_gamma",
    "kr2_bound",
    "density_histogram",
    "DensityHistogram",
    "clear_caches",
]

MAX_DIVERGENCE_FRACTION = 1e-3


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------


@dataclass
class McEstimate:
    """Monte Carlo mean with its sampling uncertainty."""

    mean: float
    stderr: float
    n: int
    ess: float
    ci95: tuple
    n_excluded: int = 0

    @classmethod
    def from_values(cls, values, weights=None, n_excluded=0):
        values = np.asarray(values, dtype=float)
        n = values.size
        if n == 0:
            raise EstimatorError("no samples left to average")
        mean = float(np.mean(values))
        stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        if weights is None:
            ess = float(n)
        else:
            w = np.asarray(weights, dtype=float)
            sw = float(np.sum(w))
            sw2 = float(np.sum(w * w))
            ess = sw * sw / sw2 if sw2 > 0 else float(n)
        return cls(
            mean=mean,
            stderr=stderr,
            n=n,
            ess=ess,
            ci95=(mean - 1.96 * stderr, mean + 1.96 * stderr),
            n_excluded=n_excluded,
        )

    def to_dict(self):
        return {
            "value": self.mean,
            "stderr": self.stderr,
            "n": self.n,
            "ess": self.ess,
            "ci95": list(self.ci95),
            "n_excluded": self.n_excluded,
        }


@dataclass(frozen=True)
class KrylovParams:
    """Exponents and constants entering Krylov/Khasminskii bounds."""

    alpha: float
    beta: float
    kappa: float
    lam: float
    gamma: float = 1.0
    dim_d: int = 1

    def __post_init__(self):
        if self.alpha <= 1 or self.beta <= 1:
            raise ValueError("alpha and beta must exceed 1")
        if self.dim_d / self.alpha + 2.0 / self.beta >= 2.0:
            raise ValueError("(alpha, beta) violates d/alpha + 2/beta < 2")
        if self.kappa <= 0 or self.lam <= 0:
            raise ValueError("kappa and lambda must be positive")
        if self.gamma < 1:
            raise ValueError("gamma must be at least 1")


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


class TestFunction:
    """Scalar test function on R^d with optional analytic gradient."""

    __test__ = False  # not a test case, despite the name

    def __init__(self, fn, tag, grad=None, nonnegative=False):
        self._fn = fn
        self.tag = tag
        self._grad = grad
        self.nonnegative = nonnegative

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self._fn(x)

    @property
    def has_gradient(self):
        return self._grad is not None

    def gradient(self, x):
        if self._grad is None:
            raise ValueError(f"test function {self.tag!r} has no gradient")
        return self._grad(np.asarray(x, dtype=float))

    # -- factories ----------------------------------------------------------

    @classmethod
    def constant(cls, c):
        c = float(c)
        return cls(
            lambda x: np.full(x.shape[:-1], c),
            f"constant({c:g})",
            grad=lambda x: np.zeros_like(x),
            nonnegative=c >= 0,
        )

    @classmethod
    def exponential(cls, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))

        def fn(x):
            return np.exp(x @ u)

        return cls(
            fn, f"exponential({u.tolist()})",
            grad=lambda x: fn(x)[..., None] * u,
            nonnegative=True,
        )

    @classmethod
    def coordinate(cls, i=0):
        def grad(x):
            g = np.zeros_like(x)
            g[..., i] = 1.0
            return g

        return cls(lambda x: x[..., i], f"coordinate({i})", grad=grad)

    @classmethod
    def square(cls, i=0):
        def grad(x):
            g = np.zeros_like(x)
            g[..., i] = 2.0 * x[..., i]
            return g

        return cls(
            lambda x: x[..., i] ** 2, f"square({i})", grad=grad, nonnegative=True
        )

    @classmethod
    def indicator_box(cls, c_low, c_high):
        c1 = np.atleast_1d(np.asarray(c_low, dtype=float))
        c2 = np.atleast_1d(np.asarray(c_high, dtype=float))
        return cls(
            lambda x: np.all((x >= c1) & (x <= c2), axis=-1).astype(float),
            f"indicator_box({c1.tolist()},{c2.tolist()})",
            nonnegative=True,
        )

    @classmethod
    def smooth_bump(cls, center, radius=1.0, height=1.0):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        radius = float(radius)
        height = float(height)

        def fn(x):
            s = np.sum((x - center) ** 2, axis=-1) / radius ** 2
            with np.errstate(divide="ignore", over="ignore"):
                val = np.where(s < 1.0, np.exp(1.0 - 1.0 / (1.0 - np.minimum(s, 1.0 - 1e-300))), 0.0)
            return height * val

        def grad(x):
            s = np.sum((x - center) ** 2, axis=-1) / radius ** 2
            f = fn(x)
            with np.errstate(divide="ignore", over="ignore"):
                dfds = np.where(s < 1.0, -f / np.maximum((1.0 - s) ** 2, 1e-300), 0.0)
            return dfds[..., None] * (2.0 * (x - center) / radius ** 2)

        return cls(
            fn,
            f"smooth_bump({center.tolist()},r={radius:g})",
            grad=grad,
            nonnegative=height >= 0,
        )

    @classmethod
    def from_grid(cls, nodes, values):
        """Piecewise-linear function of one coordinate from sampled values."""
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        return cls(
            lambda x: np.interp(x[..., 0], nodes, values),
            "custom_grid",
            nonnegative=bool(np.all(values >= 0)),
        )

    # -- combinators --------------------------------------------------------

    def shifted(self, y):
        """x -> f(x + y)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        grad = None
        if self._grad is not None:
            grad = lambda x: self._grad(x + y)
        return TestFunction(
            lambda x: self._fn(x + y),
            f"{self.tag}|shift({y.tolist()})",
            grad=grad,
            nonnegative=self.nonnegative,
        )

    def power(self, p):
        p = float(p)
        return TestFunction(
            lambda x: self._fn(x) ** p,
            f"{self.tag}|pow({p:g})",
            nonnegative=True,
        )

    def log_floored(self, floor=1e-12):
        return TestFunction(
            lambda x: np.log(np.maximum(self._fn(x), floor)),
            f"{self.tag}|log(floor={floor:g})",
        )

    def directional_derivative(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self._grad is None:
            raise ValueError(f"test function {self.tag!r} has no gradient")
        return TestFunction(
            lambda x: self._grad(x) @ y,
            f"{self.tag}|dir_deriv({y.tolist()})",
        )


class SpaceTimeFunction:
    """Nonnegative f(t, x) with its mixed L^beta_alpha norm."""

    def __init__(self, fn, tag, norm_fn):
        self._fn = fn
        self.tag = tag
        self._norm_fn = norm_fn

    def __call__(self, t, x):
        return self._fn(t, np.asarray(x, dtype=float))

    def lqp_norm(self, alpha, beta, t_lo, t_hi):
        """||f||_{L^beta_alpha(t_lo, t_hi)}."""
        return self._norm_fn(alpha, beta, float(t_lo), float(t_hi))

    @classmethod
    def box(cls, t_lo, t_hi, c_low, c_high, height=1.0):
        t_lo, t_hi, height = float(t_lo), float(t_hi), float(height)
        c1 = np.atleast_1d(np.asarray(c_low, dtype=float))
        c2 = np.atleast_1d(np.asarray(c_high, dtype=float))
        vol = float(np.prod(c2 - c1))

        def fn(t, x):
            in_time = (t >= t_lo) and (t <= t_hi)
            inside = np.all((x >= c1) & (x <= c2), axis=-1).astype(float)
            return height * inside if in_time else np.zeros(x.shape[:-1])

        def norm(alpha, beta, s, t):
            length = max(0.0, min(t_hi, t) - max(t_lo, s))
            return height * vol ** (1.0 / alpha) * length ** (1.0 / beta)

        return cls(fn, f"st_box([{t_lo:g},{t_hi:g}]x{c1.tolist()}..{c2.tolist()})", norm)

    @classmethod
    def bump(cls, t_center, t_radius, center, radius, height=1.0):
        space = TestFunction.smooth_bump(center, radius, 1.0)
        t_center, t_radius, height = float(t_center), float(t_radius), float(height)
        center = np.atleast_1d(np.asarray(center, dtype=float))
        radius = float(radius)

        def g(t):
            s = ((t - t_center) / t_radius) ** 2
            return np.where(s < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)

        def fn(t, x):
            return height * float(g(np.asarray(t))) * space(x)

        def norm(alpha, beta, s, t):
            # separable: ||f|| = height * ||space||_alpha * (int g^beta)^{1/beta}
            lo = center - radius
            hi = center + radius
            space_norm = _refining_integral(
                lambda pts: space(pts) ** alpha, lo, hi, DEFAULT_QUADRATURE
            ) ** (1.0 / alpha)
            ts = np.linspace(s, t, 4097)
            time_part = float(np.trapezoid(g(ts) ** beta, ts)) ** (1.0 / beta)
            return height * space_norm * time_part

        return cls(fn, f"st_bump(t={t_center:g}+-{t_radius:g})", norm)


# ---------------------------------------------------------------------------
# scenario caches
# ---------------------------------------------------------------------------

_CACHE_LOCK = threading.Lock()
_TERMINAL_CACHE = {}
_COUPLED_CACHE = {}


def clear_caches():
    with _CACHE_LOCK:
        _TERMINAL_CACHE.clear()
        _COUPLED_CACHE.clear()


def _default_grid(T, grid):
    return grid if grid is not None else TimeGrid(T, 1024)


def _cached_terminals(drift, diff, x, grid, n_samples, seed):
    key = (drift, diff, tuple(np.atleast_1d(x).tolist()), grid, n_samples, seed)
    with _CACHE_LOCK:
        hit = _TERMINAL_CACHE.get(key)
    if hit is not None:
        return hit
    streams = np.arange(n_samples, dtype=np.uint64)
    x_T, diverged = terminal_states(
        drift, diff, np.atleast_1d(np.asarray(x, dtype=float)), grid, streams, seed
    )
    result = (x_T, diverged)
    with _CACHE_LOCK:
        _TERMINAL_CACHE[key] = result
    return result


def _cached_coupled(kind, drift, diff, x, y, grid, n_samples, seed):
    key = (
        kind,
        drift,
        diff,
        tuple(np.atleast_1d(x).tolist()),
        tuple(np.atleast_1d(y).tolist()),
        grid,
        n_samples,
        seed,
    )
    with _CACHE_LOCK:
        hit = _COUPLED_CACHE.get(key)
    if hit is not None:
        return hit
    streams = np.arange(n_samples, dtype=np.uint64)
    result = coupled_terminals(
        kind,
        drift,
        diff,
        np.atleast_1d(np.asarray(x, dtype=float)),
        np.atleast_1d(np.asarray(y, dtype=float)),
        grid,
        streams,
        seed,
    )
    with _CACHE_LOCK:
        _COUPLED_CACHE[key] = result
    return result


def _drop_diverged(diverged, *arrays):
    ok = diverged < 0
    n_bad = int(np.sum(~ok))
    if n_bad > MAX_DIVERGENCE_FRACTION * diverged.size:
        raise EstimatorError(
            f"{n_bad} of {diverged.size} paths diverged "
            f"(more than {MAX_DIVERGENCE_FRACTION:.1%})"
        )
    if n_bad == 0:
        return arrays if len(arrays) > 1 else arrays[0]
    trimmed = tuple(a[ok] for a in arrays)
    return trimmed if len(trimmed) > 1 else trimmed[0]


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def semigroup_values(f, drift, diff, x, T, n_samples, grid=None, seed=0):
    """Per-sample values f(X_T^x) on the cached scenario paths."""
    grid = _default_grid(T, grid)
    x_T, diverged = _cached_terminals(drift, diff, x, grid, n_samples, seed)
    return _drop_diverged(diverged, f(x_T))


def mc_semigroup(f, drift, diff, x, T, n_samples, grid=None, seed=0):
    """Plain Monte Carlo estimate of P_T f(x) = E f(X_T^x)."""
    return McEstimate.from_values(
        semigroup_values(f, drift, diff, x, T, n_samples, grid, seed)
    )


def _coupled_scenario(kind, drift, diff, x, y, T, n_samples, grid, seed):
    grid = _default_grid(T, grid)
    data = _cached_coupled(kind, drift, diff, x, y, grid, n_samples, seed)
    x_T, lw, phi_sq = _drop_diverged(
        data["diverged_step"], data["x_T"], data["log_weight"], data["phi_sq_integral"]
    )
    return x_T, lw, phi_sq


def weighted_semigroup(f, kind, drift, diff, x, y, T, n_samples, grid=None, seed=0):
    """Girsanov-weighted estimate: E[R f(X_T)] (Harnack) / E[R f(X_T + y)] (shift).

    The Harnack form targets P_T f(y); the shift form targets P_T f(x) for
    the shifted integrand.  Infinite weights are excluded and counted.
    """
    x_T, lw, _ = _coupled_scenario(kind, drift, diff, x, y, T, n_samples, grid, seed)
    with np.errstate(over="ignore"):
        w = np.exp(lw)
    finite = np.isfinite(w)
    n_excluded = int(np.sum(~finite))
    w = w[finite]
    pts = x_T[finite]
    if kind is CouplingKind.SHIFT:
        pts = pts + np.atleast_1d(np.asarray(y, dtype=float))
    return McEstimate.from_values(w * f(pts), weights=w, n_excluded=n_excluded)


def entropy_weight_pair(kind, drift, diff, x, y, T, n_samples, grid=None, seed=0):
    """Two estimators of E[R log R]: weighted log-weight, and half the
    weighted phi-square integral.  They must agree within sampling error."""
    _, lw, phi_sq = _coupled_scenario(kind, drift, diff, x, y, T, n_samples, grid, seed)
    with np.errstate(over="ignore"):
        w = np.exp(lw)
    finite = np.isfinite(w)
    n_excluded = int(np.sum(~finite))
    w, lw, phi_sq = w[finite], lw[finite], phi_sq[finite]
    primary = McEstimate.from_values(w * lw, weights=w, n_excluded=n_excluded)
    companion = McEstimate.from_values(0.5 * w * phi_sq, weights=w, n_excluded=n_excluded)
    return primary, companion


def entropy_weight(kind, drift, diff, x, y, T, n_samples, grid=None, seed=0):
    """E[R log R] with an internal cross-check of the two estimators."""
    primary, companion = entropy_weight_pair(
        kind, drift, diff, x, y, T, n_samples, grid, seed
    )
    gap = abs(primary.mean - companion.mean)
    tol = 3.0 * math.hypot(primary.stderr, companion.stderr) + 1e-12
    if gap > tol:
        raise EstimatorError(
            f"entropy estimators disagree: {primary.mean:g} vs {companion.mean:g}"
        )
    return primary


def weight_moment(kind, drift, diff, x, y, T, p, n_samples, grid=None, seed=0):
    """E[R^{p/(p-1)}] computed through log-sum-exp."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    _, lw, _ = _coupled_scenario(kind, drift, diff, x, y, T, n_samples, grid, seed)
    r = p / (p - 1.0)
    n = lw.size
    log_mean = logsumexp(r * lw) - math.log(n)
    log_m2 = logsumexp(2.0 * r * lw) - math.log(n)
    with np.errstate(over="ignore"):
        mean = float(np.exp(log_mean))
        m2 = float(np.exp(log_m2))
    var = max(m2 - mean * mean, 0.0)
    stderr = math.sqrt(var / n) if np.isfinite(var) else math.inf
    ess = float(np.exp(2.0 * logsumexp(r * lw) - logsumexp(2.0 * r * lw)))
    return McEstimate(
        mean=mean,
        stderr=stderr,
        n=n,
        ess=ess,
        ci95=(mean - 1.96 * stderr, mean + 1.96 * stderr),
    )


def krylov_functionals(fs, drift, diff, x, T, n_samples, grid=None, seed=0):
    """E int_0^T f(r, X_r) dr for several f on common paths."""
    grid = _default_grid(T, grid)
    streams = np.arange(n_samples, dtype=np.uint64)
    sums, diverged = occupation_sums(
        drift, diff, np.atleast_1d(np.asarray(x, dtype=float)), grid, streams, seed, fs
    )
    sums = _drop_diverged(diverged, sums)
    return [McEstimate.from_values(sums[:, j]) for j in range(len(fs))]


def krylov_functional(f, drift, diff, x, T, params, n_samples, grid=None, seed=0):
    """E int_0^T f(r, X_r) dr by grid Riemann sums over paths.

    ``params`` carries the (alpha, beta) pair for the companion norm
    ``f.lqp_norm(params.alpha, params.beta, 0, T)``; the Monte Carlo sum
    itself does not depend on it.
    """
    return krylov_functionals([f], drift, diff, x, T, n_samples, grid, seed)[0]


def default_probe_family(T, d):
    """Five space-time boxes of varying width plus one smooth bump."""
    probes = []
    for half in (0.25, 0.5, 1.0, 1.5, 2.0):
        probes.append(
            SpaceTimeFunction.box(0.0, T, [-half] * d, [half] * d)
        )
    probes.append(
        SpaceTimeFunction.bump(T / 2.0, T / 2.0, [0.0] * d, 1.5)
    )
    return probes


def estimate_kappa(
    drift,
    diff,
    T,
    params,
    probes,
    n_samples,
    grid=None,
    seed=0,
    initial_points=None,
    safety_factor=1.2,
):
    """Empirical Krylov constant: max functional-to-norm ratio, inflated.

    The ratio is taken over every probe and a small grid of initial points;
    the safety factor guards against underestimation from a finite probe set.
    """
    if not probes:
        raise ValueError("probe family must be nonempty")
    d = drift.dim_d
    norms = [f.lqp_norm(params.alpha, params.beta, 0.0, T) for f in probes]
    if any(nv <= 0 for nv in norms):
        raise ValueError("every probe must have a positive mixed norm")
    if initial_points is None:
        unit = np.zeros(d)
        unit[0] = 1.0
        initial_points = [-0.5 * unit, np.zeros(d), 0.5 * unit]
    best = 0.0
    for x0 in initial_points:
        ests = krylov_functionals(probes, drift, diff, x0, T, n_samples, grid, seed)
        for est, nv in zip(ests, norms):
            best = max(best, est.mean / nv)
    return safety_factor * best


def kr2_bound(lam, kappa, f_norm):
    """Geometric-series exponential-moment bound 1/(1 - lam kappa ||f||)."""
    if f_norm < 0 or lam <= 0 or kappa <= 0:
        raise ValueError("inputs must be positive (f_norm nonnegative)")
    x = lam * kappa * f_norm
    if x >= 1.0:
        raise ValueError(
            f"lam * kappa * ||f|| = {x:g} >= 1: the geometric series diverges"
        )
    return 1.0 / (1.0 - x)


def khasminskii_gamma(params, norm_profile, T, threshold=0.5, max_greedy=64):
    """Exponential-moment constant by greedy interval splitting.

    ``norm_profile(s, t)`` is the mixed norm of f on the subinterval.  If a
    single interval keeps lam kappa ||f|| below the threshold the sharper
    single-interval bound is returned; otherwise the interval count n gives
    gamma = 2^n with per-interval bound 1/(1 - threshold) = 2.

    After ``max_greedy`` greedy pieces the remaining count is extrapolated
    from the last piece length (exact for time-homogeneous norms, where every
    greedy piece has equal length).  When 2^n overflows the float range the
    constant is reported as infinity rather than failing: the bound is valid
    but vacuous at that point.
    """
    lam_kappa = params.lam * params.kappa
    full = norm_profile(0.0, T)
    if lam_kappa * full <= threshold:
        return kr2_bound(params.lam, params.kappa, full)
    min_len = T * 1e-9
    s = 0.0
    n_intervals = 0
    while s < T * (1.0 - 1e-12):
        if lam_kappa * norm_profile(s, T) <= threshold:
            n_intervals += 1
            break
        if lam_kappa * norm_profile(s, min(s + min_len, T)) > threshold:
            raise NonConvergenceError(
                "subinterval norm cannot be brought below the threshold"
            )
        lo, hi = s, T
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if lam_kappa * norm_profile(s, mid) <= threshold:
                lo = mid
            else:
                hi = mid
        piece = lo - s
        s = lo
        n_intervals += 1
        if n_intervals >= max_greedy and piece > 0.0:
            n_intervals += int(math.ceil((T - s) / piece))
            break
    try:
        return 2.0 ** n_intervals
    except OverflowError:
        return math.inf


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------


@dataclass
class DensityHistogram:
    """Piecewise-constant terminal density on a 1-D grid."""

    edges: np.ndarray
    density: np.ndarray
    divergence_fraction: float

    @property
    def integral(self):
        return float(np.sum(self.density * np.diff(self.edges)))

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, y, side="right") - 1, 0,
                      len(self.density) - 1)
        inside = (y >= self.edges[0]) & (y <= self.edges[-1])
        return np.where(inside, self.density[idx], 0.0)


def density_histogram(
    drift, diff, x, T, n_samples, bins, support=(-5.0, 5.0), grid=None, seed=0
):
    """Histogram density of X_T; supported in dimension one only."""
    if drift.dim_d != 1 or diff.d != 1:
        raise UnsupportedDimensionError("density histogram requires d = 1")
    grid = _default_grid(T, grid)
    x_T, diverged = _cached_terminals(drift, diff, x, grid, n_samples, seed)
    ok = diverged < 0
    frac_diverged = 1.0 - float(np.sum(ok)) / n_samples
    # clip stragglers into the edge bins so the recorded mass is exact
    samples = np.clip(x_T[ok, 0], support[0], support[1])
    counts, edges = np.histogram(samples, bins=bins, range=support)
    widths = np.diff(edges)
    density = counts / (n_samples * widths)
    return DensityHistogram(
        edges=edges, density=density, divergence_fraction=frac_diverged
    )
