"""Explicit constants and inequality checks with Monte Carlo margins.

Each check produces an InequalityReport comparing a left side against a
right side with combined sampling uncertainty.  Statistical verdicts use a
3-sigma rule so that Monte Carlo noise cannot produce false violations.
"""

import math
from dataclasses import dataclass

import numpy as np

from .coupling import CouplingKind
from .estimate import (
    KrylovParams,
    khasminskii_gamma,
    krylov_functional,
    mc_semigroup,
    semigroup_values,
    weight_moment,
    weighted_semigroup,
)
from .model import LipschitzDrift, MollifiedIndicatorDrift, ZeroDrift, lqp_norm

__all__ = [
    "Verdict",
    "InequalityReport",
    "beta_constant",
    "harnack_admissible",
    "harnack_factor",
    "check_harnack",
    "check_weight_moment_bound",
    "check_girsanov_consistency",
    "check_shift_log_harnack",
    "check_shift_harnack",
    "check_krylov",
    "check_variance_gradient",
]


class Verdict:
    HOLDS = "Holds"
    HOLDS_WITHIN_CI = "HoldsWithinCI"
    VIOLATED = "ViolatedBeyondCI"
    NOT_ADMISSIBLE = "NotAdmissible"


@dataclass
class InequalityReport:
    """LHS vs RHS of one inequality, with constants and a verdict."""

    name: str
    lhs: float
    rhs: float
    lhs_stderr: float
    rhs_stderr: float
    constant_used: dict
    admissible: bool
    margin: float
    margin_stderr: float
    verdict: str
    notes: tuple = ()

    def to_dict(self):
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "lhs_stderr": self.lhs_stderr,
            "rhs_stderr": self.rhs_stderr,
            "constants": {k: _jsonable(v) for k, v in self.constant_used.items()},
            "admissible": self.admissible,
            "margin": self.margin,
            "margin_stderr": self.margin_stderr,
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _one_sided_verdict(margin, sigma):
    """Verdict for an inequality lhs <= rhs with margin = rhs - lhs."""
    if sigma <= 0.0:
        return Verdict.HOLDS if margin >= -1e-12 else Verdict.VIOLATED
    if margin >= 3.0 * sigma:
        return Verdict.HOLDS
    if margin > -3.0 * sigma:
        return Verdict.HOLDS_WITHIN_CI
    return Verdict.VIOLATED


def _two_sided_verdict(margin, sigma):
    """Verdict for an equality check with margin = rhs - lhs."""
    if sigma <= 0.0:
        return Verdict.HOLDS if abs(margin) <= 1e-12 else Verdict.VIOLATED
    if abs(margin) <= 3.0 * sigma:
        return Verdict.HOLDS_WITHIN_CI
    return Verdict.VIOLATED


def _report(name, lhs, rhs, lhs_se, rhs_se, constants, admissible=True,
            two_sided=False, notes=()):
    margin = rhs - lhs
    sigma = math.hypot(lhs_se, rhs_se)
    if not admissible:
        verdict = Verdict.NOT_ADMISSIBLE
    elif two_sided:
        verdict = _two_sided_verdict(margin, sigma)
    else:
        verdict = _one_sided_verdict(margin, sigma)
    return InequalityReport(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        lhs_stderr=float(lhs_se),
        rhs_stderr=float(rhs_se),
        constant_used=constants,
        admissible=admissible,
        margin=float(margin),
        margin_stderr=float(sigma),
        verdict=verdict,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


def beta_constant(T, K_lq_norm, delta, kappa):
    """delta (1/T + kappa ||K||^2_{L^q([0,T])})."""
    if T <= 0 or delta <= 0 or kappa <= 0 or K_lq_norm < 0:
        raise ValueError("all constants must be positive (||K|| nonnegative)")
    return delta * (1.0 / T + kappa * K_lq_norm ** 2)


def harnack_admissible(x, y, p, beta):
    """Smallness condition |x-y|^2 < (p-1)^2 / ((2p+2) beta); returns
    (admissible, threshold for |x-y|^2)."""
    dist_sq = float(np.sum((np.atleast_1d(x) - np.atleast_1d(y)) ** 2))
    threshold = (p - 1.0) ** 2 / ((2.0 * p + 2.0) * beta)
    return dist_sq < threshold, threshold


def harnack_factor(dist_sq, p, beta):
    """(1 - (2p+2) beta |x-y|^2 / (p-1)^2)^{-(p-1)/2}; 1 at zero displacement."""
    arg = 1.0 - (2.0 * p + 2.0) * beta * dist_sq / (p - 1.0) ** 2
    if arg <= 0.0:
        return math.inf
    return arg ** (-(p - 1.0) / 2.0)


def drift_k_lq_norm(drift, T):
    """||K||_{L^q([0,T])} for a K-providing drift family."""
    k_lq = drift.k_lq_norm(T)
    if k_lq is None:
        raise ValueError(
            "this check needs a drift family with a translation modulus K "
            "(Zero, Lipschitz, or MollifiedIndicator)"
        )
    return k_lq


def _is_k_family(drift):
    return isinstance(drift, (ZeroDrift, LipschitzDrift, MollifiedIndicatorDrift))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def check_harnack(f, drift, diff, x, y, p, T, n_samples, kappa,
                  grid=None, seed=0):
    """(P_T f)^p(y) <= P_T f^p(x) * power-Harnack factor."""
    if not f.nonnegative:
        raise ValueError("Harnack check requires a nonnegative test function")
    if not _is_k_family(drift):
        raise ValueError("Harnack check requires a K-providing drift family")
    k_lq = drift_k_lq_norm(drift, T)
    beta = beta_constant(T, k_lq, diff.delta, kappa)
    admissible, threshold = harnack_admissible(x, y, p, beta)
    dist_sq = float(np.sum((np.atleast_1d(x) - np.atleast_1d(y)) ** 2))
    constants = {
        "beta": beta,
        "kappa": kappa,
        "delta": diff.delta,
        "K_lq_norm": k_lq,
        "p": p,
        "T": T,
        "dist_sq": dist_sq,
        "threshold_dist_sq": threshold,
    }
    if not admissible:
        return _report("Harnack", math.nan, math.nan, 0.0, 0.0, constants,
                       admissible=False)
    factor = harnack_factor(dist_sq, p, beta)
    constants["factor"] = factor
    left = mc_semigroup(f, drift, diff, y, T, n_samples, grid, seed)
    right = mc_semigroup(f.power(p), drift, diff, x, T, n_samples, grid, seed)
    lhs = left.mean ** p
    lhs_se = p * left.mean ** (p - 1.0) * left.stderr
    rhs = right.mean * factor
    rhs_se = right.stderr * factor
    return _report("Harnack", lhs, rhs, lhs_se, rhs_se, constants)


def check_weight_moment_bound(drift, diff, x, y, p, T, kappa, n_samples,
                              grid=None, seed=0):
    """(E R(T)^{p/(p-1)})^2 <= 1 / (1 - (2p+2) beta |x-y|^2 / (p-1)^2)."""
    if not _is_k_family(drift):
        raise ValueError("weight-moment bound requires a K-providing drift family")
    k_lq = drift_k_lq_norm(drift, T)
    beta = beta_constant(T, k_lq, diff.delta, kappa)
    admissible, threshold = harnack_admissible(x, y, p, beta)
    dist_sq = float(np.sum((np.atleast_1d(x) - np.atleast_1d(y)) ** 2))
    constants = {
        "beta": beta,
        "kappa": kappa,
        "delta": diff.delta,
        "K_lq_norm": k_lq,
        "p": p,
        "T": T,
        "dist_sq": dist_sq,
        "threshold_dist_sq": threshold,
    }
    if not admissible:
        return _report("WeightMomentBound", math.nan, math.nan, 0.0, 0.0,
                       constants, admissible=False)
    est = weight_moment(CouplingKind.HARNACK, drift, diff, x, y, T, p,
                        n_samples, grid, seed)
    lhs = est.mean ** 2
    lhs_se = 2.0 * est.mean * est.stderr
    rhs = 1.0 / (1.0 - (2.0 * p + 2.0) * beta * dist_sq / (p - 1.0) ** 2)
    return _report("WeightMomentBound", lhs, rhs, lhs_se, 0.0, constants)


def check_girsanov_consistency(f, drift, diff, x, y, T, n_samples,
                               grid=None, seed=0, kind=CouplingKind.HARNACK):
    """Weighted estimate vs direct estimate of the same semigroup value.

    Harnack kind: E[R f(X_T^x)] against P_T f(y).  Shift kind:
    E[R f(X_T^x + y)] against P_T f(x).  The strongest validity test of the
    coupling construction.
    """
    weighted = weighted_semigroup(f, kind, drift, diff, x, y, T, n_samples,
                                  grid, seed)
    target = y if kind is CouplingKind.HARNACK else x
    direct = mc_semigroup(f, drift, diff, target, T, n_samples, grid, seed)
    constants = {"T": T, "kind": kind.value, "ess": weighted.ess,
                 "n_excluded": weighted.n_excluded}
    return _report(
        "GirsanovConsistency",
        weighted.mean,
        direct.mean,
        weighted.stderr,
        direct.stderr,
        constants,
        two_sided=True,
    )


def check_shift_log_harnack(f, variant, drift, diff, x, y, T, kappa,
                            n_samples, grid=None, seed=0, floor=1e-12):
    """P_T log f(x) <= log P_T f(y + .)(x) + additive constant.

    Variant "i" uses delta(|y|^2/T + 4 kappa ||b||^2); variant "ii" needs a
    K-providing family and uses beta |y|^2.
    """
    y_vec = np.atleast_1d(np.asarray(y, dtype=float))
    y_sq = float(y_vec @ y_vec)
    notes = [f"f floored at {floor:g} before taking logs"]
    if variant == "i":
        b_norm = lqp_norm(drift, T)
        const = diff.delta * (y_sq / T + 4.0 * kappa * b_norm ** 2)
        constants = {"delta": diff.delta, "kappa": kappa, "b_lqp_norm": b_norm,
                     "T": T, "y_sq": y_sq, "additive_constant": const}
        name = "ShiftLogHarnack_i"
    elif variant == "ii":
        if not _is_k_family(drift):
            raise ValueError("variant (ii) requires a K-providing drift family")
        k_lq = drift_k_lq_norm(drift, T)
        beta = beta_constant(T, k_lq, diff.delta, kappa)
        const = beta * y_sq
        constants = {"beta": beta, "kappa": kappa, "delta": diff.delta,
                     "K_lq_norm": k_lq, "T": T, "y_sq": y_sq,
                     "additive_constant": const}
        name = "ShiftLogHarnack_ii"
    else:
        raise ValueError("variant must be 'i' or 'ii'")
    left = mc_semigroup(f.log_floored(floor), drift, diff, x, T, n_samples,
                        grid, seed)
    shifted = mc_semigroup(f.shifted(y_vec), drift, diff, x, T, n_samples,
                           grid, seed)
    rhs = math.log(shifted.mean) + const
    rhs_se = shifted.stderr / shifted.mean
    return _report(name, left.mean, rhs, left.stderr, rhs_se, constants,
                   notes=notes)


def _khasminskii_for_drift(drift, diff, p, T, kappa):
    """Exponential-moment constant for the drift-difference functional.

    The squared drift difference is controlled in L^{q/2}_{p/2} by
    (2 ||b||)^2, and the Girsanov exponent carries 2 delta (p+1)/(p-1)^2.
    """
    lam = 2.0 * diff.delta * (p + 1.0) / (p - 1.0) ** 2
    params = KrylovParams(
        alpha=drift.p_exponent / 2.0,
        beta=drift.q_exponent / 2.0,
        kappa=kappa,
        lam=lam,
        dim_d=drift.dim_d,
    )

    if drift.time_homogeneous:
        lp = drift.lp_norm(0.0)
        inv_q = 1.0 / drift.q_exponent

        def profile(s, t):
            if t <= s:
                return 0.0
            return 4.0 * (lp * (t - s) ** inv_q) ** 2

    else:

        def profile(s, t):
            if t <= s:
                return 0.0
            return 4.0 * lqp_norm(drift, t, s=s) ** 2

    gamma_k = khasminskii_gamma(params, profile, T)
    return gamma_k, lam


def check_shift_harnack(f, variant, p, drift, diff, x, y, T, kappa,
                        n_samples, grid=None, seed=0):
    """(P_T f)^p(x) <= P_T f^p(y + .)(x) * multiplicative factor."""
    if not f.nonnegative:
        raise ValueError("shift Harnack check requires a nonnegative test function")
    y_vec = np.atleast_1d(np.asarray(y, dtype=float))
    y_sq = float(y_vec @ y_vec)
    admissible = True
    notes = ()
    if variant == "i":
        gamma_k, lam = _khasminskii_for_drift(drift, diff, p, T, kappa)
        # (E R^{p/(p-1)})^{p-1} <= gamma_k^{(p-1)/2} e^{delta (p+1)|y|^2 / ((p-1) T)};
        # written in the statement's shape gamma * e^{delta (p+1)|y|^2/(2(p-1)T)}
        # with the leftover half of the exponent absorbed into gamma
        half_exp = diff.delta * (p + 1.0) * y_sq / (2.0 * (p - 1.0) * T)
        try:
            gamma_stmt = gamma_k ** ((p - 1.0) / 2.0) * math.exp(half_exp)
        except OverflowError:
            gamma_stmt = math.inf
        factor = gamma_stmt * math.exp(half_exp)
        constants = {
            "gamma": gamma_stmt,
            "gamma_khasminskii": gamma_k,
            "khasminskii_lambda": lam,
            "kappa": kappa,
            "delta": diff.delta,
            "p": p,
            "T": T,
            "y_sq": y_sq,
            "factor": factor,
        }
        notes = ("gamma carries a |y|-dependent part so the statement's "
                 "exponent shape is preserved",)
        name = "ShiftPowerHarnack_i"
    elif variant == "ii":
        if not _is_k_family(drift):
            raise ValueError("variant (ii) requires a K-providing drift family")
        k_lq = drift_k_lq_norm(drift, T)
        beta = beta_constant(T, k_lq, diff.delta, kappa)
        threshold = (p - 1.0) ** 2 / ((2.0 * p + 2.0) * beta)
        admissible = y_sq < threshold
        factor = harnack_factor(y_sq, p, beta) if admissible else math.inf
        constants = {
            "beta": beta,
            "kappa": kappa,
            "delta": diff.delta,
            "K_lq_norm": k_lq,
            "p": p,
            "T": T,
            "y_sq": y_sq,
            "threshold_y_sq": threshold,
            "factor": factor,
        }
        name = "ShiftPowerHarnack_ii"
    else:
        raise ValueError("variant must be 'i' or 'ii'")
    if not admissible:
        return _report(name, math.nan, math.nan, 0.0, 0.0, constants,
                       admissible=False)
    left = mc_semigroup(f, drift, diff, x, T, n_samples, grid, seed)
    right = mc_semigroup(f.power(p).shifted(y_vec), drift, diff, x, T,
                         n_samples, grid, seed)
    lhs = left.mean ** p
    lhs_se = p * left.mean ** (p - 1.0) * left.stderr
    rhs = right.mean * factor
    rhs_se = right.stderr * factor
    return _report(name, lhs, rhs, lhs_se, rhs_se, constants, notes=notes)


def check_krylov(f, drift, diff, x, T, params, n_samples, grid=None, seed=0):
    """E int_0^T f(r, X_r) dr <= kappa ||f||_{L^beta_alpha(T)}."""
    est = krylov_functional(f, drift, diff, x, T, params, n_samples, grid, seed)
    norm = f.lqp_norm(params.alpha, params.beta, 0.0, T)
    rhs = params.kappa * norm
    constants = {"kappa": params.kappa, "alpha": params.alpha,
                 "beta_exponent": params.beta, "f_norm": norm, "T": T}
    return _report("KrylovBound", est.mean, rhs, est.stderr, 0.0, constants)


def check_variance_gradient(f, drift, diff, x, y, T, kappa, n_samples,
                            grid=None, seed=0):
    """|P_T <grad f, y>(x)|^2 <= 2 beta {P_T f^2(x) - (P_T f)^2(x)}.

    All three expectations run on common paths.
    """
    if not f.has_gradient:
        raise ValueError("variance-gradient check requires a smooth test function")
    if not _is_k_family(drift):
        raise ValueError("variance-gradient check requires a K-providing drift")
    k_lq = drift_k_lq_norm(drift, T)
    beta = beta_constant(T, k_lq, diff.delta, kappa)
    y_vec = np.atleast_1d(np.asarray(y, dtype=float))

    grad_vals = semigroup_values(
        f.directional_derivative(y_vec), drift, diff, x, T, n_samples, grid, seed
    )
    f_vals = semigroup_values(f, drift, diff, x, T, n_samples, grid, seed)
    n = f_vals.size
    grad_mean = float(np.mean(grad_vals))
    grad_se = float(np.std(grad_vals, ddof=1) / math.sqrt(n))
    lhs = grad_mean ** 2
    lhs_se = 2.0 * abs(grad_mean) * grad_se
    variance = float(np.var(f_vals, ddof=1))
    centered = f_vals - np.mean(f_vals)
    m4 = float(np.mean(centered ** 4))
    var_se = math.sqrt(max(m4 - variance ** 2, 0.0) / n)
    rhs = 2.0 * beta * variance
    rhs_se = 2.0 * beta * var_se
    constants = {"beta": beta, "kappa": kappa, "delta": diff.delta,
                 "K_lq_norm": k_lq, "T": T, "variance": variance}
    return _report("VarianceGradient", lhs, rhs, lhs_se, rhs_se, constants)
