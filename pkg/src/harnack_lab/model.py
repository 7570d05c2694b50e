"""Drift and diffusion specifications with their integrability data.

Drift families are immutable (hashable) value objects that evaluate
vectorized over batches of states.  Space and space-time mixed norms are
closed-form where the family admits it and tensor-grid quadrature with
refinement otherwise.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, NonConvergenceError

__all__ = [
    "QuadratureParams",
    "DriftSpec",
    "ZeroDrift",
    "LipschitzDrift",
    "IndicatorBoxDrift",
    "MollifiedIndicatorDrift",
    "GridDrift",
    "DiffusionSpec",
    "HypothesisReport",
    "eval_drift",
    "lqp_norm",
    "translation_modulus",
    "check_hypotheses",
]


@dataclass(frozen=True)
class QuadratureParams:
    """Resolution and tolerance for the tensor-grid space integrals."""

    points_per_axis: int = 129
    max_refinements: int = 6
    rel_tol: float = 1e-4
    time_points: int = 65

    def __post_init__(self):
        if self.points_per_axis < 3 or self.time_points < 3:
            raise ValueError("quadrature resolution must be positive")


DEFAULT_QUADRATURE = QuadratureParams()


def _refining_integral(fn, lows, highs, params):
    """Trapezoid integral of ``fn`` over a box, refined until stable.

    ``fn`` maps an ``(N, d)`` array of points to ``(N,)`` values.
    """
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    d = lows.size
    n = params.points_per_axis
    previous = None
    for _ in range(params.max_refinements + 1):
        axes = [np.linspace(lows[i], highs[i], n) for i in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = fn(pts).reshape([n] * d)
        for i in range(d - 1, -1, -1):
            vals = np.trapezoid(vals, axes[i], axis=i)
        total = float(vals)
        if previous is not None:
            if abs(total - previous) <= params.rel_tol * max(abs(total), 1e-300) + 1e-14:
                return total
        previous = total
        n = 2 * n - 1
        if n ** d > 2 ** 27:
            break
    raise NonConvergenceError("space quadrature did not converge")


# ---------------------------------------------------------------------------
# drift families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftSpec:
    """Base drift family b_t(x) with its integrability exponents (p, q)."""

    dim_d: int
    p_exponent: float
    q_exponent: float

    def __post_init__(self):
        if self.dim_d < 1:
            raise DimensionMismatchError("state dimension must be positive")
        if self.p_exponent <= 1 or self.q_exponent <= 1:
            raise ValueError("integrability exponents must exceed 1")

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, t, x):
        """Vectorized b_t(x); ``x`` has shape ``(..., dim_d)``."""
        raise NotImplementedError

    def _check_points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim_d:
            raise DimensionMismatchError(
                f"state has dimension {x.shape[-1]}, drift expects {self.dim_d}"
            )
        return x

    # -- integrability data -------------------------------------------------

    @property
    def time_homogeneous(self):
        return True

    def lp_norm(self, t, quadrature=DEFAULT_QUADRATURE):
        """Spatial L^p norm of b_t."""
        raise NotImplementedError

    def translation_lp(self, t, y, quadrature=DEFAULT_QUADRATURE):
        """L^p norm of b_t(. + y) - b_t."""
        raise NotImplementedError

    def k_value(self, t):
        """Translation modulus K(t) when the family provides one, else None."""
        return None

    def k_lq_norm(self, T):
        """L^q([0, T]) norm of K, for K-providing families."""
        k = self.k_value(0.0)
        if k is None:
            return None
        # all built-in K profiles are constant in time
        return k * T ** (1.0 / self.q_exponent)


@dataclass(frozen=True)
class ZeroDrift(DriftSpec):
    """b identically zero."""

    def evaluate(self, t, x):
        x = self._check_points(x)
        return np.zeros_like(x)

    def lp_norm(self, t, quadrature=DEFAULT_QUADRATURE):
        return 0.0

    def translation_lp(self, t, y, quadrature=DEFAULT_QUADRATURE):
        return 0.0

    def k_value(self, t):
        return 0.0


@dataclass(frozen=True)
class LipschitzDrift(DriftSpec):
    """b_t(x) = A x + v: a linear map plus a bounded (constant) part.

    Not spatially integrable, so the mixed norm diverges; the family still
    provides a translation modulus K(t) = ||A||_op in the sup sense.
    """

    linear: tuple = ()
    offset: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        a = np.asarray(self.linear, dtype=float)
        v = np.asarray(self.offset, dtype=float)
        if a.shape != (self.dim_d, self.dim_d) or v.shape != (self.dim_d,):
            raise DimensionMismatchError("linear map / offset shape mismatch")

    @property
    def matrix(self):
        return np.asarray(self.linear, dtype=float)

    @property
    def offset_vector(self):
        return np.asarray(self.offset, dtype=float)

    def evaluate(self, t, x):
        x = self._check_points(x)
        return x @ self.matrix.T + self.offset_vector

    def lp_norm(self, t, quadrature=DEFAULT_QUADRATURE):
        if np.any(self.matrix != 0.0) or np.any(self.offset_vector != 0.0):
            raise NonConvergenceError("affine drift is not spatially integrable")
        return 0.0

    def translation_lp(self, t, y, quadrature=DEFAULT_QUADRATURE):
        shift = self.matrix @ np.asarray(y, dtype=float)
        if np.any(shift != 0.0):
            raise NonConvergenceError(
                "translation difference of an affine drift is a nonzero "
                "constant, hence not integrable"
            )
        return 0.0

    def k_value(self, t):
        return float(np.linalg.norm(self.matrix, 2))


def _box_arrays(spec):
    a = np.asarray(spec.amplitude, dtype=float)
    c1 = np.asarray(spec.corner_low, dtype=float)
    c2 = np.asarray(spec.corner_high, dtype=float)
    return a, c1, c2


@dataclass(frozen=True)
class IndicatorBoxDrift(DriftSpec):
    """b = a 1_[c1, c2]: constant vector on a box, zero outside."""

    amplitude: tuple = ()
    corner_low: tuple = ()
    corner_high: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        a, c1, c2 = _box_arrays(self)
        if not (a.shape == c1.shape == c2.shape == (self.dim_d,)):
            raise DimensionMismatchError("box parameters must have dimension dim_d")
        if np.any(c1 > c2):
            raise ValueError("box corners must satisfy c1 <= c2 componentwise")

    def evaluate(self, t, x):
        x = self._check_points(x)
        a, c1, c2 = _box_arrays(self)
        inside = np.all((x >= c1) & (x <= c2), axis=-1)
        return inside[..., None] * a

    def lp_norm(self, t, quadrature=DEFAULT_QUADRATURE):
        a, c1, c2 = _box_arrays(self)
        vol = float(np.prod(c2 - c1))
        return float(np.linalg.norm(a)) * vol ** (1.0 / self.p_exponent)

    def translation_lp(self, t, y, quadrature=DEFAULT_QUADRATURE):
        # |B symdiff (B - y)| = 2 (vol(B) - vol(B intersect (B - y)))
        a, c1, c2 = _box_arrays(self)
        y = np.asarray(y, dtype=float)
        sides = c2 - c1
        overlap = float(np.prod(np.maximum(0.0, sides - np.abs(y))))
        symdiff = 2.0 * (float(np.prod(sides)) - overlap)
        return float(np.linalg.norm(a)) * symdiff ** (1.0 / self.p_exponent)


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _smoothstep_deriv(u):
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 6.0 * u * (1.0 - u), 0.0)


@dataclass(frozen=True)
class MollifiedIndicatorDrift(DriftSpec):
    """Indicator-box drift with a smoothstep ramp of width eps on each face.

    The per-coordinate profile rises from 0 to 1 over [c1 - eps, c1], is 1 on
    the box, and falls back to 0 over [c2, c2 + eps]; the drift is the
    amplitude times the product of profiles.  Lipschitz in x, so K(t) exists.
    """

    amplitude: tuple = ()
    corner_low: tuple = ()
    corner_high: tuple = ()
    width: float = 0.1

    def __post_init__(self):
        super().__post_init__()
        a, c1, c2 = _box_arrays(self)
        if not (a.shape == c1.shape == c2.shape == (self.dim_d,)):
            raise DimensionMismatchError("box parameters must have dimension dim_d")
        if np.any(c1 > c2):
            raise ValueError("box corners must satisfy c1 <= c2 componentwise")
        if self.width <= 0:
            raise ValueError("smoothing width must be positive")

    def _profiles(self, x):
        _, c1, c2 = _box_arrays(self)
        eps = self.width
        up = _smoothstep((x - (c1 - eps)) / eps)
        down = _smoothstep(((c2 + eps) - x) / eps)
        return np.minimum(up, down)

    def _profile_derivs(self, x):
        _, c1, c2 = _box_arrays(self)
        eps = self.width
        u_up = (x - (c1 - eps)) / eps
        u_dn = ((c2 + eps) - x) / eps
        rising = _smoothstep(u_up) < _smoothstep(u_dn)
        d_up = _smoothstep_deriv(u_up) / eps
        d_dn = -_smoothstep_deriv(u_dn) / eps
        return np.where(rising, d_up, d_dn)

    def evaluate(self, t, x):
        x = self._check_points(x)
        a, _, _ = _box_arrays(self)
        shape = np.prod(self._profiles(x), axis=-1)
        return shape[..., None] * a

    def _envelope(self):
        _, c1, c2 = _box_arrays(self)
        return c1 - self.width, c2 + self.width

    def lp_norm(self, t, quadrature=DEFAULT_QUADRATURE):
        a, _, _ = _box_arrays(self)
        lo, hi = self._envelope()
        p = self.p_exponent

        def integrand(pts):
            return np.prod(self._profiles(pts), axis=-1) ** p

        return float(np.linalg.norm(a)) * _refining_integral(
            integrand, lo, hi, quadrature
        ) ** (1.0 / p)

    def translation_lp(self, t, y, quadrature=DEFAULT_QUADRATURE):
        a, _, _ = _box_arrays(self)
        y = np.asarray(y, dtype=float)
        lo, hi = self._envelope()
        lo = np.minimum(lo, lo - y)
        hi = np.maximum(hi, hi - y)
        p = self.p_exponent

        def integrand(pts):
            diff = np.prod(self._profiles(pts + y), axis=-1) - np.prod(
                self._profiles(pts), axis=-1
            )
            return np.abs(diff) ** p

        return float(np.linalg.norm(a)) * _refining_integral(
            integrand, lo, hi, quadrature
        ) ** (1.0 / p)

    def gradient_frobenius(self, x):
        """|grad b(x)| (Frobenius) at the given points, shape (...,)."""
        x = self._check_points(x)
        a, _, _ = _box_arrays(self)
        g = self._profiles(x)
        gd = self._profile_derivs(x)
        # partial_j (prod g_i) = gd_j * prod_{i != j} g_i; whenever some profile
        # vanishes the point lies outside the envelope in that coordinate and
        # every partial is zero, so the quotient form with a zero fallback is exact
        prod = np.prod(g, axis=-1, keepdims=True)
        partials = np.where(g > 0.0, prod * gd / np.where(g > 0.0, g, 1.0), 0.0)
        shape_grad = np.linalg.norm(partials, axis=-1)
        return float(np.linalg.norm(a)) * shape_grad

    def k_value(self, t, quadrature=DEFAULT_QUADRATURE):
        lo, hi = self._envelope()
        p = self.p_exponent

        def integrand(pts):
            return self.gradient_frobenius(pts) ** p

        return _refining_integral(integrand, lo, hi, quadrature) ** (1.0 / p)


@dataclass(frozen=True)
class GridDrift(DriftSpec):
    """Drift sampled on a regular space-time lattice, linearly interpolated.

    Zero outside the spatial box; time is clamped to [0, t_max].
    """

    t_max: float = 1.0
    x_low: tuple = ()
    x_high: tuple = ()
    shape: tuple = ()  # (n_t, n_1, ..., n_d)
    values_bytes: bytes = b""

    @classmethod
    def from_array(cls, values, t_max, x_low, x_high, p_exponent, q_exponent):
        values = np.ascontiguousarray(values, dtype=float)
        d = values.shape[-1]
        return cls(
            dim_d=d,
            p_exponent=p_exponent,
            q_exponent=q_exponent,
            t_max=float(t_max),
            x_low=tuple(float(v) for v in x_low),
            x_high=tuple(float(v) for v in x_high),
            shape=values.shape[:-1],
            values_bytes=values.tobytes(),
        )

    def __post_init__(self):
        super().__post_init__()
        if len(self.shape) != self.dim_d + 1:
            raise DimensionMismatchError("lattice shape must be (n_t, n_1..n_d)")
        if len(self.x_low) != self.dim_d or len(self.x_high) != self.dim_d:
            raise DimensionMismatchError("lattice box must have dimension dim_d")

    @property
    def values(self):
        return np.frombuffer(self.values_bytes).reshape(self.shape + (self.dim_d,))

    @property
    def time_homogeneous(self):
        return self.shape[0] == 1

    def _axes(self):
        taxis = np.linspace(0.0, self.t_max, self.shape[0])
        xaxes = [
            np.linspace(self.x_low[i], self.x_high[i], self.shape[1 + i])
            for i in range(self.dim_d)
        ]
        return taxis, xaxes

    def evaluate(self, t, x):
        from scipy.interpolate import RegularGridInterpolator

        x = self._check_points(x)
        taxis, xaxes = self._axes()
        t = float(np.clip(t, 0.0, self.t_max))
        pts = np.concatenate(
            [np.full(x.shape[:-1] + (1,), t), x], axis=-1
        ).reshape(-1, self.dim_d + 1)
        interp = RegularGridInterpolator(
            (taxis, *xaxes), self.values, bounds_error=False, fill_value=0.0
        )
        out = interp(pts)
        return out.reshape(x.shape[:-1] + (self.dim_d,))

    def lp_norm(self, t, quadrature=DEFAULT_QUADRATURE):
        p = self.p_exponent

        def integrand(pts):
            return np.linalg.norm(self.evaluate(t, pts), axis=-1) ** p

        return _refining_integral(
            integrand, np.asarray(self.x_low), np.asarray(self.x_high), quadrature
        ) ** (1.0 / p)

    def translation_lp(self, t, y, quadrature=DEFAULT_QUADRATURE):
        y = np.asarray(y, dtype=float)
        lo = np.minimum(np.asarray(self.x_low), np.asarray(self.x_low) - y)
        hi = np.maximum(np.asarray(self.x_high), np.asarray(self.x_high) - y)
        p = self.p_exponent

        def integrand(pts):
            diff = self.evaluate(t, pts + y) - self.evaluate(t, pts)
            return np.linalg.norm(diff, axis=-1) ** p

        return _refining_integral(integrand, lo, hi, quadrature) ** (1.0 / p)


# ---------------------------------------------------------------------------
# diffusion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiffusionSpec:
    """Time-dependent matrix sigma_t with ellipticity constant delta > 1.

    ``schedule`` is a tuple of (t_end, matrix) pairs; the matrix applies on
    [previous t_end, t_end).  A single pair with t_end = inf is a constant
    coefficient.  Each scheduled matrix must satisfy
    delta^{-1} I <= sigma sigma* <= delta I.
    """

    schedule: tuple
    delta: float

    _ELLIPTICITY_TOL = 1e-10

    @classmethod
    def constant(cls, sigma, delta):
        sigma = np.asarray(sigma, dtype=float)
        return cls(
            schedule=((np.inf, tuple(map(tuple, sigma))),), delta=float(delta)
        )

    @classmethod
    def identity(cls, d, delta=1.01):
        return cls.constant(np.eye(d), delta)

    def __post_init__(self):
        if self.delta <= 1.0:
            raise ValueError("ellipticity constant delta must exceed 1")
        if not self.schedule:
            raise ValueError("empty diffusion schedule")
        d, m = self.dims
        for t_end, mat in self.schedule:
            sig = np.asarray(mat, dtype=float)
            if sig.shape != (d, m):
                raise DimensionMismatchError("inconsistent sigma shapes in schedule")
            gram = sig @ sig.T
            eig = np.linalg.eigvalsh(gram)
            tol = self._ELLIPTICITY_TOL
            if eig.min() < 1.0 / self.delta - tol or eig.max() > self.delta + tol:
                raise ValueError(
                    "sigma sigma* eigenvalues outside [1/delta, delta]: "
                    f"[{eig.min():g}, {eig.max():g}] vs delta={self.delta:g}"
                )
            weight = sig.T @ np.linalg.inv(gram)
            residual = np.abs(sig @ weight - np.eye(d)).max()
            if residual > 1e-10:
                raise ValueError(f"weight-matrix residual {residual:g} exceeds 1e-10")

    @property
    def dims(self):
        sig = np.asarray(self.schedule[0][1], dtype=float)
        return sig.shape

    @property
    def m(self):
        return self.dims[1]

    @property
    def d(self):
        return self.dims[0]

    def sigma_at(self, t):
        for t_end, mat in self.schedule:
            if t < t_end:
                return np.asarray(mat, dtype=float)
        return np.asarray(self.schedule[-1][1], dtype=float)

    def weight_at(self, t):
        """sigma* (sigma sigma*)^{-1} at time t."""
        sig = self.sigma_at(t)
        return sig.T @ np.linalg.inv(sig @ sig.T)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def eval_drift(spec, t, x):
    """b_t(x) for a single state vector."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim_d,):
        raise DimensionMismatchError(
            f"state has shape {x.shape}, expected ({spec.dim_d},)"
        )
    return spec.evaluate(float(t), x[None, :])[0]


def lqp_norm(spec, T, quadrature=DEFAULT_QUADRATURE, s=0.0):
    """Mixed norm ||b||_{L^q_p(s, T)}: time-q of the spatial L^p norms."""
    if T <= s:
        raise ValueError("time horizon must exceed the interval start")
    q = spec.q_exponent
    if spec.time_homogeneous:
        return spec.lp_norm(0.0, quadrature) * (T - s) ** (1.0 / q)
    times = np.linspace(s, T, quadrature.time_points)
    vals = np.array([spec.lp_norm(t, quadrature) ** q for t in times])
    return float(np.trapezoid(vals, times)) ** (1.0 / q)


def translation_modulus(spec, t, y, quadrature=DEFAULT_QUADRATURE):
    """Spatial L^p norm of b_t(. + y) - b_t."""
    y = np.asarray(y, dtype=float)
    if not np.any(y != 0.0):
        raise ValueError("displacement must be nonzero")
    return spec.translation_lp(float(t), y, quadrature)


@dataclass
class HypothesisReport:
    """Outcome of checking (H1)/(H2) for a drift/diffusion pair."""

    lqp_norm_of_b: float
    K_profile: tuple  # ((t, K(t)), ...)
    K_lq_norm: float
    admissible_pq: bool
    h2_ok: bool
    empirical_translation_ratios: tuple  # ((|y|, ratio), ...)
    k_is_analytic: bool = True
    notes: tuple = ()


def check_hypotheses(
    spec,
    diff,
    T,
    probe_displacements,
    quadrature=DEFAULT_QUADRATURE,
    n_profile_points=9,
):
    """Evaluate (H1)/(H2) data: mixed norm of b, K profile, admissibility.

    For families with an analytic translation modulus K the profile is
    exact; for the others the sup-ratio table is reported without asserting
    the linear modulus.
    """
    if T <= 0:
        raise ValueError("time horizon must be positive")
    notes = []
    try:
        b_norm = lqp_norm(spec, T, quadrature)
    except NonConvergenceError:
        b_norm = np.inf
        notes.append("||b||_{L^q_p(T)} diverges for this family")

    ratios = []
    for y in probe_displacements:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        mag = float(np.linalg.norm(y))
        if mag == 0.0:
            raise ValueError("probe displacements must be nonzero")
        try:
            mod = translation_modulus(spec, 0.0, y, quadrature)
        except NonConvergenceError:
            mod = np.inf
        ratios.append((mag, mod / mag))

    k0 = spec.k_value(0.0)
    if k0 is not None:
        times = np.linspace(0.0, T, n_profile_points)
        profile = tuple((float(t), float(k0)) for t in times)
        k_lq = float(k0) * T ** (1.0 / spec.q_exponent)
        analytic = True
    else:
        sup_ratio = max((r for _, r in ratios if np.isfinite(r)), default=np.inf)
        times = np.linspace(0.0, T, n_profile_points)
        profile = tuple((float(t), float(sup_ratio)) for t in times)
        k_lq = float(sup_ratio) * T ** (1.0 / spec.q_exponent)
        analytic = False
        notes.append("K profile is the empirical sup-ratio; (1.7)-style "
                     "linearity is not asserted for this family")

    admissible = spec.dim_d / spec.p_exponent + 2.0 / spec.q_exponent < 1.0
    # DiffusionSpec construction already enforces the ellipticity band
    h2_ok = True

    return HypothesisReport(
        lqp_norm_of_b=float(b_norm),
        K_profile=profile,
        K_lq_norm=float(k_lq),
        admissible_pq=bool(admissible),
        h2_ok=h2_ok,
        empirical_translation_ratios=tuple(ratios),
        k_is_analytic=analytic,
        notes=tuple(notes),
    )
