"""Heisenberg-type dispersion products for metaplectic operators.

Three inequalities are evaluated, each as ``product >= bound``:

* directional: one ker(B)^perp coordinate of x against the matching
  R(B) coordinate of xi, bound ``const * ||f||^2 / (4 pi)``;
* full: all r coordinates at once, bound
  ``Tr((B^T B)^{1/2}) * const * ||f||^2 / (4 pi)``;
* cartesian: x_j against xi_k with bound ``|B_kj| ||f||^2 / (4 pi)``.

``const`` is K_S by default.  ``constant="unit"`` uses 1 instead, the value
the commutator of the two coordinate operators gives for every S.

Inputs may be grid samples (with Sf on a grid) or Gaussian states, for
which every moment is evaluated in closed form.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .gaussian import GaussianState, gaussian_mean, gaussian_moments, transform_gaussian
from .grid import GridFunction, l2_norm, weighted_mean, weighted_moment
from .symplectic import (NoUncertaintyError, SubspaceFrame, SymplecticMatrix, build_frame,
                         constants)
from .transform import transform_grid

FOUR_PI = 4.0 * np.pi
CONSTANTS = ("K_S", "unit")


class DegenerateInputError(ValueError):
    """Raised for f = 0."""


@dataclass(frozen=True)
class UncertaintyReport:
    lhs_space: float
    lhs_freq: float
    product: float
    bound: float
    ratio: float
    alpha_used: tuple
    beta_used: tuple
    mode: str
    norm2: float
    clipped_mass: float = 0.0
    constant: float = 1.0

    def holds(self, tol: float = 5e-3) -> bool:
        return self.ratio >= 1.0 - tol

    def as_dict(self) -> dict:
        return asdict(self)


def ratio_of(product: float, bound: float) -> float:
    """product / bound, with +inf for a zero bound and 1 when both vanish."""
    if bound > 0:
        return product / bound
    return 1.0 if product == 0 else math.inf


# -- moment back-ends ---------------------------------------------------------

def _norm2(f) -> float:
    if isinstance(f, GaussianState):
        return f.norm2()
    return l2_norm(f) ** 2


def _moment(f, a, center) -> float:
    if isinstance(f, GaussianState):
        return gaussian_moments(f, a, 0.0, center)
    return weighted_moment(f, (a, 0.0), center)


def _mean(f, a) -> float:
    if isinstance(f, GaussianState):
        return gaussian_mean(f, a)
    return weighted_mean(f, (a, 0.0))


def _image(S: SymplecticMatrix, f, Sf):
    """Sf and its clipped mass, computing Sf when the caller did not."""
    if Sf is not None:
        if isinstance(f, GridFunction) and isinstance(Sf, GridFunction):
            return Sf, max(0.0, 1.0 - _norm2(Sf) / _norm2(f))
        return Sf, 0.0
    if isinstance(f, GaussianState):
        return transform_gaussian(S, f), 0.0
    if isinstance(f, GridFunction):
        out, info = transform_grid(S, f, return_info=True)
        return out, info["clipped_mass"]
    raise TypeError(f"unsupported input type {type(f).__name__}")


def _check_input(f) -> float:
    n2 = _norm2(f)
    if not n2 > 0:
        raise DegenerateInputError("f has zero norm")
    return n2


def _centers(f, rows, given, name):
    k = rows.shape[0]
    if given is None or (isinstance(given, str) and given == "auto"):
        return np.array([_mean(f, a) for a in rows])
    c = np.broadcast_to(np.asarray(given, float), (k,))
    if not np.all(np.isfinite(c)):
        raise ValueError(f"{name} must be finite")
    return c.copy()


COORDS = ("oblique", "orthogonal")


def _coordinate_rows(frame, coords):
    """Rows a_j, b_j with x1^(j) = a_j . x and xi1^(j) = b_j . xi."""
    if coords == "oblique":
        return frame.x1_coords, frame.xi1_coords
    if coords == "orthogonal":
        return frame.V.T, frame.V.T @ frame.B_pinv
    raise ValueError(f"coords must be one of {COORDS}")


def _scale(S, frame, constant) -> float:
    if constant == "K_S":
        return constants(S, frame).K_S
    if constant == "unit":
        return 1.0
    raise ValueError(f"constant must be one of {CONSTANTS}")


# -- the three inequalities ---------------------------------------------------

def heisenberg_directional(S: SymplecticMatrix, frame: SubspaceFrame | None, f, Sf=None,
                           j: int = 1, alpha="auto", beta="auto",
                           constant: str = "K_S", coords: str = "oblique") -> UncertaintyReport:
    """Dispersion of x1^(j) under f times that of xi1^(j) under Sf (``j`` is 1-based).

    ``coords="oblique"`` reads x1, xi1 off the splittings
    x = x1 + x2 in ker(B)^perp + D^T A ker(B) and xi = xi1 + xi2 in R(B) + A ker(B);
    ``"orthogonal"`` uses (V^T x)_j and (V^T B^+ xi)_j.  Both agree when the
    splittings are orthogonal.
    """
    frame = build_frame(S) if frame is None else frame
    if frame.r == 0:
        raise NoUncertaintyError("B = 0: no uncertainty principle")
    if not 1 <= j <= frame.r:
        raise ValueError(f"direction j={j} outside 1..{frame.r}")
    n2 = _check_input(f)
    Sf, clipped = _image(S, f, Sf)
    rows_x, rows_xi = _coordinate_rows(frame, coords)
    a = rows_x[j - 1:j]
    b = rows_xi[j - 1:j]
    al = _centers(f, a, alpha, "alpha")
    be = _centers(Sf, b, beta, "beta")
    ls = math.sqrt(_moment(f, a[0], al[0]))
    lf = math.sqrt(_moment(Sf, b[0], be[0]))
    k = _scale(S, frame, constant)
    bound = k * n2 / FOUR_PI
    return UncertaintyReport(ls, lf, ls * lf, bound, ratio_of(ls * lf, bound),
                             tuple(al), tuple(be), f"directional_{j}", n2, clipped, k)


def _cartesian_dispersion(f, centers, d):
    eye = np.eye(d)
    c = _centers(f, eye, centers, "center")
    return math.sqrt(sum(_moment(f, eye[i], c[i]) for i in range(d))), c


def heisenberg_full(S: SymplecticMatrix, frame: SubspaceFrame | None, f, Sf=None,
                    alpha="auto", beta="auto", constant: str = "K_S",
                    coords: str = "oblique") -> UncertaintyReport:
    """All r directions at once.

    ``alpha`` is given in the v_j coordinates of ker(B)^perp and ``beta`` in
    the B v_j coordinates of R(B).  The frequency deviation is
    ``sum_j sigma_j^2 |xi1^(j) - beta_j|^2``, which is |xi1 - beta|^2 when the
    columns of B V are orthogonal (eigen or svd ordered frames).

    With B = 0 the report falls back to Cartesian dispersions against a zero
    bound, so the ratio is +inf.
    """
    frame = build_frame(S, ordering="eigen") if frame is None else frame
    n2 = _check_input(f)
    Sf, clipped = _image(S, f, Sf)
    if frame.r == 0:
        ls, al = _cartesian_dispersion(f, alpha, S.d)
        lf, be = _cartesian_dispersion(Sf, beta, S.d)
        return UncertaintyReport(ls, lf, ls * lf, 0.0, ratio_of(ls * lf, 0.0), tuple(al),
                                 tuple(be), "full", n2, clipped, 0.0)
    BV = S.B @ frame.V
    G = BV.T @ BV
    sig = np.sqrt(np.diag(G))
    if np.max(np.abs(G - np.diag(np.diag(G)))) > 1e-8 * max(1.0, sig.max() ** 2):
        raise ValueError("the columns of B V are not orthogonal; use an eigen- or svd-ordered frame")
    a, b = _coordinate_rows(frame, coords)
    al = _centers(f, a, alpha, "alpha")
    be = _centers(Sf, b, beta, "beta")
    ls = math.sqrt(sum(_moment(f, a[i], al[i]) for i in range(frame.r)))
    lf = math.sqrt(sum(sig[i] ** 2 * _moment(Sf, b[i], be[i]) for i in range(frame.r)))
    k = _scale(S, frame, constant)
    bound = float(np.sum(sig)) * k * n2 / FOUR_PI
    return UncertaintyReport(ls, lf, ls * lf, bound, ratio_of(ls * lf, bound),
                             tuple(al), tuple(be), "full", n2, clipped, k)


def heisenberg_cartesian(S: SymplecticMatrix, f, Sf=None, j: int = 1, k: int = 1,
                         alpha="auto", beta="auto") -> UncertaintyReport:
    """Dispersion of x_j under f times that of xi_k under Sf, bound |B_kj| ||f||^2/(4 pi)."""
    d = S.d
    if not (1 <= j <= d and 1 <= k <= d):
        raise ValueError(f"indices ({j}, {k}) outside 1..{d}")
    n2 = _check_input(f)
    Sf, clipped = _image(S, f, Sf)
    ej, ek = np.eye(d)[j - 1], np.eye(d)[k - 1]
    al = _centers(f, ej[None], alpha, "alpha")
    be = _centers(Sf, ek[None], beta, "beta")
    ls = math.sqrt(_moment(f, ej, al[0]))
    lf = math.sqrt(_moment(Sf, ek, be[0]))
    bound = abs(S.B[k - 1, j - 1]) * n2 / FOUR_PI
    return UncertaintyReport(ls, lf, ls * lf, bound, ratio_of(ls * lf, bound),
                             tuple(al), tuple(be), f"cartesian_{j}_{k}", n2, clipped, 1.0)


# -- sweeps -------------------------------------------------------------------

@dataclass
class SweepRow:
    param: float
    report: UncertaintyReport
    flagged: bool = field(default=False)


def bound_sweep(family, f0, params, clip_tol: float = 1e-3, constant: str = "K_S") -> list:
    """Full-inequality report for ``family(p)`` at each parameter ``p``.

    Rows whose output grid lost more than ``clip_tol`` of the mass are flagged.
    """
    rows = []
    for p in params:
        S = family(p)
        rep = heisenberg_full(S, build_frame(S, ordering="eigen"), f0, constant=constant)
        rows.append(SweepRow(float(p), rep, rep.clipped_mass > clip_tol))
    return rows


def csv_header(d: int) -> list:
    return (["param", "lhs_space", "lhs_freq", "product", "bound", "ratio"]
            + [f"alpha{i + 1}" for i in range(d)] + [f"beta{i + 1}" for i in range(d)]
            + ["clipped_mass"])


def csv_row(param, rep: UncertaintyReport, d: int) -> list:
    def pad(v):
        v = list(v)[:d]
        return v + [float("nan")] * (d - len(v))

    return ([param, rep.lhs_space, rep.lhs_freq, rep.product, rep.bound, rep.ratio]
            + pad(rep.alpha_used) + pad(rep.beta_used) + [rep.clipped_mass])


def write_sweep_csv(path, rows: list, d: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(d))
        for row in rows:
            w.writerow([repr(float(v)) for v in csv_row(row.param, row.report, d)])
