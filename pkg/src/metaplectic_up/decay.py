"""Beurling and Morgan type decay conditions for f and its metaplectic image.

Finiteness of an integral over an unbounded domain cannot be decided from
samples, so every condition is reported as a growth trend of truncated
integrals over an increasing radius schedule (:func:`probe_growth`).  All
sums are accumulated in the log domain because the weights overflow f64
quickly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import qmc

from .symplectic import NoUncertaintyError, SubspaceFrame, SymplecticMatrix, constants

TRENDS = ("converging", "diverging", "inconclusive")
DEFAULT_BEURLING_RADII = (2.0, 6.0, 18.0, 54.0)
DEFAULT_MORGAN_RADII = (1.0, 2.0, 4.0, 8.0)
PAIR_BUDGET = 2 ** 24


class ProbeDataError(ValueError):
    """Raised for malformed partial-integral sequences."""


@dataclass(frozen=True)
class GrowthProbe:
    radii: tuple
    partial_integrals: tuple
    trend: str
    fit_slope: float
    increment_ratios: tuple
    log_partials: tuple

    def csv_rows(self) -> list:
        ratios = (float("nan"),) * (len(self.radii) - len(self.increment_ratios)) + self.increment_ratios
        return [(r, p, q) for r, p, q in zip(self.radii, self.partial_integrals, ratios)]

    def verdict(self) -> dict:
        return {"trend": self.trend, "fit_slope": self.fit_slope,
                "increment_ratios": list(self.increment_ratios)}


def _log_diff(hi: float, lo: float) -> float:
    """log(exp(hi) - exp(lo)) for hi >= lo."""
    if lo == -math.inf:
        return hi
    if hi == math.inf:
        return math.inf
    d = lo - hi
    if d >= 0:
        return -math.inf
    return hi + math.log(-math.expm1(d))


def probe_growth(partials, radii, *, log: bool = False, converge_ratio: float = 0.5,
                 diverge_ratio: float = 0.95, tail: int = 3, rtol: float = 1e-12) -> GrowthProbe:
    """Classify truncated integrals I(R_0) <= I(R_1) <= ... by their increments.

    ``partials`` is a sequence of values (their logs when ``log=True``) or a
    callable radius -> value.  Over the last ``tail`` increments the trend is
    ``converging`` when every increment ratio is at most ``converge_ratio``,
    ``diverging`` when every ratio is at least ``diverge_ratio``, and
    ``inconclusive`` otherwise.  Increments at the rounding level of the
    partial count as zero.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < 4:
        raise ProbeDataError("the radius schedule needs at least 4 entries")
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ProbeDataError("radii must be positive and strictly increasing")
    if callable(partials):
        partials = [partials(float(R)) for R in radii]
    vals = np.asarray(partials, dtype=float)
    if vals.shape != radii.shape:
        raise ProbeDataError("one partial integral per radius is required")
    if log:
        lp = vals
    else:
        if np.any(vals < 0) or np.any(np.isnan(vals)):
            raise ProbeDataError("partial integrals must be nonnegative")
        with np.errstate(divide="ignore"):
            lp = np.log(vals)
    if np.any(np.isnan(lp)):
        raise ProbeDataError("partial integrals must not be NaN")
    slack = math.log1p(rtol)
    with np.errstate(invalid="ignore"):
        steps = np.diff(lp)
    if np.any(steps[np.isfinite(steps)] < -slack) or np.any(np.isneginf(lp[1:]) & np.isfinite(lp[:-1])):
        raise ProbeDataError("partial integrals are not nondecreasing")

    # log increments, at rounding level treated as exact zeros
    linc = []
    for a, b in zip(lp[:-1], lp[1:]):
        if b == math.inf:
            linc.append(math.inf)
        elif b == -math.inf or b - a <= slack:
            linc.append(-math.inf)
        else:
            linc.append(_log_diff(b, a))
    linc = np.array(linc)
    ratios = []
    for a, b in zip(linc[:-1], linc[1:]):
        if b == -math.inf:
            ratios.append(0.0)
        elif a == -math.inf or b == math.inf:
            ratios.append(math.inf)
        elif a == math.inf:
            ratios.append(1.0)
        else:
            ratios.append(math.exp(min(b - a, 700.0)))
    ratios = np.array(ratios)
    last = ratios[-(tail - 1):] if tail > 1 else ratios[-1:]
    if np.all(last <= converge_ratio):
        trend = "converging"
    elif np.all(last >= diverge_ratio):
        trend = "diverging"
    else:
        trend = "inconclusive"

    tail_r, tail_lp = radii[-tail:], lp[-tail:]
    if np.all(np.isfinite(tail_lp)):
        slope = float(np.polyfit(tail_r, tail_lp, 1)[0])
    else:
        slope = math.inf if np.any(tail_lp == math.inf) else float("nan")
    with np.errstate(over="ignore"):
        vals_out = tuple(float(v) for v in np.exp(lp))
    return GrowthProbe(tuple(float(r) for r in radii), vals_out, trend, slope,
                       tuple(float(q) for q in ratios), tuple(float(v) for v in lp))


# -- evaluator helpers ---------------------------------------------------------

def log_modulus(evaluator, pts) -> np.ndarray:
    """log|evaluator(pts)|, through ``evaluator.log_abs`` when it exists."""
    if hasattr(evaluator, "log_abs"):
        return np.asarray(evaluator.log_abs(pts), dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(np.asarray(evaluator(pts))))


def _ball_grid(r: int, R: float, h: float):
    axis = np.arange(-R + h / 2, R, h)
    pts = np.stack(np.meshgrid(*([axis] * r), indexing="ij"), -1).reshape(-1, r)
    return pts, np.linalg.norm(pts, axis=1)


def _require_r(frame: SubspaceFrame) -> int:
    if frame.r == 0:
        raise NoUncertaintyError("B = 0: ker(B)^perp is trivial")
    return frame.r


# -- Beurling --------------------------------------------------------------------

def beurling_log_partials(f_eval, Sf_eval, S: SymplecticMatrix, frame: SubspaceFrame, xi2,
                          N: float, radii, h: float = 0.05) -> np.ndarray:
    """log of the truncated Beurling integrals for each radius in ``radii``.

    The integrand is
    ``|f(V u + D^T xi2)| |Sf(B V eta + xi2)| exp(2 pi |u.eta|) / (1 + |u| + |eta|)^N``
    over ``|u| <= R`` and ``|eta| <= R`` with midpoint cells of side ``h``.
    """
    r = _require_r(frame)
    if not N > 0:
        raise ValueError("N must be positive")
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    xi2 = np.zeros(S.d) if xi2 is None else np.asarray(xi2, dtype=float)
    Rmax = float(radii.max())
    u, nu = _ball_grid(r, Rmax, h)
    if u.shape[0] ** 2 > PAIR_BUDGET:
        raise ValueError(f"{u.shape[0] ** 2} cell pairs exceed the budget; raise h")
    V = frame.V
    lf = log_modulus(f_eval, u @ V.T + S.D.T @ xi2)
    lS = log_modulus(Sf_eval, u @ (S.B @ V).T + xi2)
    L = (lf[:, None] + lS[None, :] + 2 * np.pi * np.abs(u @ u.T)
         - N * np.log1p(nu[:, None] + nu[None, :]))
    lcell = 2 * r * math.log(h)
    out = []
    for R in radii:
        m = nu <= R
        out.append(float(logsumexp(L[np.ix_(m, m)])) + lcell if m.any() else -math.inf)
    return np.array(out)


def beurling_integral(f_eval, Sf_eval, S: SymplecticMatrix, frame: SubspaceFrame, xi2,
                      N: float, R: float, h: float = 0.05) -> float:
    """Truncated Beurling integral at radius ``R``; may be +inf after overflow."""
    lp = beurling_log_partials(f_eval, Sf_eval, S, frame, xi2, N, [R], h)[0]
    with np.errstate(over="ignore"):
        return float(np.exp(lp))


def beurling_probe(f_eval, Sf_eval, S: SymplecticMatrix, frame: SubspaceFrame, xi2, N: float,
                   radii=DEFAULT_BEURLING_RADII, h: float = 0.05, **rule) -> GrowthProbe:
    lp = beurling_log_partials(f_eval, Sf_eval, S, frame, xi2, N, radii, h)
    return probe_growth(lp, radii, log=True, **rule)


# -- Morgan ----------------------------------------------------------------------

def morgan_threshold(p: float) -> float:
    """|cos(p pi / 2)|^(1/p) for 1 < p < 2."""
    p = float(p)
    if not 1.0 < p < 2.0:
        raise ValueError(f"p must lie in (1, 2), got {p}")
    return abs(math.cos(p * math.pi / 2)) ** (1.0 / p)


@dataclass(frozen=True)
class MorganParams:
    p: float
    a: float
    b: float

    def __post_init__(self):
        morgan_threshold(self.p)
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be positive")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def threshold(self) -> float:
        return morgan_threshold(self.p)

    def regime(self, rtol: float = 1e-12) -> str:
        """``"trivial"`` above the threshold, ``"boundary"`` on it, else ``"open"``."""
        ab, t = self.a * self.b, self.threshold
        if abs(ab - t) <= rtol * t:
            return "boundary"
        return "trivial" if ab > t else "open"


EXPONENTS = ("linear", "power")


def _morgan_log_weight(c: float, s: np.ndarray, p: float, exponent: str) -> np.ndarray:
    if exponent == "linear":
        return c * np.abs(s)
    if exponent == "power":
        return c * np.abs(s) ** p
    raise ValueError(f"exponent must be one of {EXPONENTS}")


def _slab_log_partials(logf: np.ndarray, coord: np.ndarray, norms: np.ndarray, c: float,
                       p: float, exponent: str, radii, r: int, h: float) -> np.ndarray:
    L = logf + _morgan_log_weight(c, coord, p, exponent)
    lcell = r * math.log(h)
    out = []
    for R in radii:
        m = norms <= R
        out.append(float(logsumexp(L[m])) + lcell if m.any() else -math.inf)
    return np.array(out)


def morgan_condition_probe(f_eval, frame: SubspaceFrame, j: int, a: float, p: float, x2=None,
                           radii=DEFAULT_MORGAN_RADII, exponent: str = "linear",
                           h: float = 0.02, **rule) -> GrowthProbe:
    """Truncated ``int |f(V u + x2)| exp(2 pi a^p / p |u_j|^k) du`` over |u| <= R.

    ``k`` is 1 for ``exponent="linear"`` and ``p`` for ``exponent="power"``.
    """
    r = _require_r(frame)
    if not 1 <= j <= r:
        raise ValueError(f"direction j={j} outside 1..{r}")
    morgan_threshold(p)
    if not a > 0:
        raise ValueError("a must be positive")
    x2 = np.zeros(frame.d) if x2 is None else np.asarray(x2, dtype=float)
    radii = np.asarray(radii, dtype=float)
    u, nu = _ball_grid(r, float(radii.max()), h)
    logf = log_modulus(f_eval, u @ frame.V.T + x2)
    c = 2 * np.pi * a ** p / p
    lp = _slab_log_partials(logf, u[:, j - 1], nu, c, p, exponent, radii, r, h)
    return probe_growth(lp, radii, log=True, **rule)


def morgan_dual_probe(Sf_eval, S: SymplecticMatrix, frame: SubspaceFrame, j: int, b: float,
                      q: float, xi2=None, radii=DEFAULT_MORGAN_RADII, exponent: str = "linear",
                      h: float = 0.02, **rule) -> GrowthProbe:
    """Truncated ``int |Sf(B V eta + xi2)| exp(2 pi b^q / q |eta_j|^k) d eta`` over |eta| <= R."""
    r = _require_r(frame)
    if not 1 <= j <= r:
        raise ValueError(f"direction j={j} outside 1..{r}")
    if not q > 2:
        raise ValueError("the dual exponent q must exceed 2")
    if not b > 0:
        raise ValueError("b must be positive")
    xi2 = np.zeros(frame.d) if xi2 is None else np.asarray(xi2, dtype=float)
    radii = np.asarray(radii, dtype=float)
    eta, ne = _ball_grid(r, float(radii.max()), h)
    logS = log_modulus(Sf_eval, eta @ (S.B @ frame.V).T + xi2)
    c = 2 * np.pi * b ** q / q
    lp = _slab_log_partials(logS, eta[:, j - 1], ne, c, q, exponent, radii, r, h)
    return probe_growth(lp, radii, log=True, **rule)


def slice_points(S: SymplecticMatrix, frame: SubspaceFrame, count: int = 5, extent: float = 1.0,
                 seed: int = 0) -> list:
    """Quasi-random xi2 in A ker(B), as (x2, xi2) pairs with x2 = D^T xi2.

    When ker(B) is trivial, the single slice is the origin.
    """
    k = frame.d - frame.r
    if k == 0:
        z = np.zeros(frame.d)
        return [(z, z)]
    t = qmc.Halton(d=k, scramble=True, seed=seed).random(count)
    t = extent * (2 * t - 1)
    xi2 = t @ (S.A @ frame.W).T
    return [(S.D.T @ x, x) for x in xi2]


# -- constructed families ------------------------------------------------------------

class ImageModulus:
    """|Sf| of a constructed family: mu_S |h(t)| |g_hat(eta)| on xi = B V eta + A W t."""

    def __init__(self, S: SymplecticMatrix, frame: SubspaceFrame, g_hat, h):
        self.S, self.frame, self.g_hat, self.h = S, frame, g_hat, h
        self.mu = constants(S, frame).mu_S

    def log_abs(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        eta = xi @ self.frame.xi1_coords.T
        t = xi @ self.frame.xi2_coords.T
        return math.log(self.mu) + log_modulus(self.g_hat, eta) + log_modulus(self.h, t)

    def __call__(self, xi) -> np.ndarray:
        return np.exp(self.log_abs(xi))


class SeparatedFamily:
    """f(V u + D^T A W t) = h(t) g(u) exp(-i pi (B^+ A V u . V u + 2 C^T A W t . V u)).

    The chirp cancels the phase of the integral representation, so
    ``|Sf(B V eta + A W t)| = mu_S |h(t)| |g_hat(eta)|`` (see :class:`ImageModulus`).
    ``g`` acts on points of R^r, ``h`` on points of R^(d - r).
    """

    def __init__(self, S: SymplecticMatrix, frame: SubspaceFrame, g, h):
        _require_r(frame)
        self.S, self.frame, self.g, self.h = S, frame, g, h
        V = frame.V
        BpA = frame.B_pinv @ S.A
        self._quad = V.T @ (0.5 * (BpA + BpA.T)) @ V
        self._cross = V.T @ S.C.T @ S.A @ frame.W     # (u, t) -> C^T A W t . V u

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.frame.x1_coords.T, x @ self.frame.x2_coords.T

    def _phase(self, u, t):
        q = np.einsum("...i,ij,...j->...", u, self._quad, u)
        cr = np.einsum("...i,ij,...j->...", u, self._cross, t) if t.shape[-1] else 0.0
        return -np.pi * (q + 2 * cr)

    def __call__(self, x) -> np.ndarray:
        u, t = self._split(x)
        return (np.asarray(self.h(t)) * np.asarray(self.g(u))) * np.exp(1j * self._phase(u, t))

    def log_abs(self, x) -> np.ndarray:
        u, t = self._split(x)
        return log_modulus(self.g, u) + log_modulus(self.h, t)


def unit_profile(t) -> np.ndarray:
    """The constant 1 on R^(d - r) (used when ker(B) is trivial or irrelevant)."""
    return np.ones(np.asarray(t).shape[:-1])


def smooth_bump(radius: float = 1.0):
    """exp(1 - 1 / (1 - |t/radius|^2)) inside the ball, 0 outside, with a log_abs."""
    if not radius > 0:
        raise ValueError("radius must be positive")

    class _Bump:
        def log_abs(self, t):
            s = np.sum((np.asarray(t, float) / radius) ** 2, axis=-1)
            out = np.full(s.shape, -np.inf)
            m = s < 1
            out[m] = 1.0 - 1.0 / (1.0 - s[m])
            return out

        def __call__(self, t):
            return np.exp(self.log_abs(t))

    return _Bump()


def construct_beurling_family(S: SymplecticMatrix, frame: SubspaceFrame, g, g_hat, h=None):
    """(f, |Sf|) for the separated family built on a profile g of R^r and its
    Fourier transform g_hat."""
    h = unit_profile if h is None else h
    return SeparatedFamily(S, frame, g, h), ImageModulus(S, frame, g_hat, h)


def construct_morgan_admissible(S: SymplecticMatrix, frame: SubspaceFrame, g, g_hat, h,
                                h_bound: float | None = None, check_radius: float = 4.0):
    """(f, |Sf|) of the separated family from a caller-supplied Morgan profile g.

    ``h`` must be bounded with compact support; it is checked on a sample of
    points.  ``h_bound`` bounds |h| when known.
    """
    k = frame.d - frame.r
    if k:
        t = qmc.Halton(d=k, scramble=True, seed=1).random(4096)
        t = check_radius * (2 * t - 1)
        lh = log_modulus(h, t)
        if np.any(np.isnan(lh)) or np.any(lh == np.inf):
            raise ValueError("h must be finite")
        if h_bound is not None and np.max(lh) > math.log(h_bound) + 1e-12:
            raise ValueError("h exceeds the declared bound")
        ring = np.linalg.norm(t, axis=1) > 0.95 * check_radius
        if np.any(np.isfinite(lh[ring]) & (lh[ring] > -700)):
            raise ValueError(f"h does not vanish near radius {check_radius}; compact support required")
    return construct_beurling_family(S, frame, g, g_hat, h)


def verify_morgan(S: SymplecticMatrix, frame: SubspaceFrame, family, params: MorganParams,
                  slices=None, exponent: str = "linear", radii=DEFAULT_MORGAN_RADII,
                  h: float = 0.02) -> dict:
    """Space and dual Morgan probes for every direction j and slice.

    Returns ``{"space": [...], "dual": [...], "all_converging": bool}``.
    """
    f, Sf_abs = family
    slices = slice_points(S, frame) if slices is None else slices
    space, dual = [], []
    for j in range(1, frame.r + 1):
        for x2, xi2 in slices:
            space.append(morgan_condition_probe(f, frame, j, params.a, params.p, x2, radii,
                                                exponent, h))
            dual.append(morgan_dual_probe(Sf_abs, S, frame, j, params.b, params.q, xi2, radii,
                                          exponent, h))
    ok = all(pr.trend == "converging" for pr in space + dual)
    return {"space": space, "dual": dual, "all_converging": ok}
