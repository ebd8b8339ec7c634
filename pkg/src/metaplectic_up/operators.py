"""Named symplectic matrices: Fourier, chirps, rescalings, multipliers, partial
Fourier transforms and Schroedinger propagators for quadratic Hamiltonians."""
from __future__ import annotations

import numpy as np

from .symplectic import SymplecticMatrix, standard_form


def _symmetric(M, name: str) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, atol=1e-12):
        raise ValueError(f"{name} must be a symmetric square matrix")
    return 0.5 * (M + M.T)


def fourier(d: int) -> SymplecticMatrix:
    return SymplecticMatrix(standard_form(d))


def chirp(Q) -> SymplecticMatrix:
    """V_Q: multiplication by exp(i pi Q t.t)."""
    Q = _symmetric(Q, "Q")
    d = Q.shape[0]
    return SymplecticMatrix.from_blocks(np.eye(d), np.zeros((d, d)), Q, np.eye(d))


def rescale(E) -> SymplecticMatrix:
    """D_E = diag(E^{-1}, E^T): f -> |det E|^{1/2} f(E t)."""
    E = np.atleast_2d(np.asarray(E, dtype=float))
    if E.shape[0] != E.shape[1] or abs(np.linalg.det(E)) < 1e-14:
        raise ValueError("E must be square and invertible")
    d = E.shape[0]
    return SymplecticMatrix.from_blocks(np.linalg.inv(E), np.zeros((d, d)), np.zeros((d, d)), E.T)


def multiplier(P) -> SymplecticMatrix:
    """V_P^T: the Fourier multiplier F^{-1}(exp(-i pi P xi.xi) F f)."""
    P = _symmetric(P, "P")
    d = P.shape[0]
    return SymplecticMatrix.from_blocks(np.eye(d), P, np.zeros((d, d)), np.eye(d))


def partial_fourier(d: int, indices) -> SymplecticMatrix:
    """Fourier transform in the (1-based) variables listed in ``indices``."""
    idx = sorted({int(i) for i in indices})
    if not idx or idx[0] < 1 or idx[-1] > d:
        raise ValueError(f"indices must be a non-empty subset of 1..{d}")
    IJ = np.zeros((d, d))
    for i in idx:
        IJ[i - 1, i - 1] = 1.0
    rest = np.eye(d) - IJ
    return SymplecticMatrix.from_blocks(rest, IJ, -IJ, rest)


def free_particle(d: int, t: float) -> SymplecticMatrix:
    """Propagator of i u_t = Delta u: the multiplier with P = -4 pi t I."""
    return multiplier(-4.0 * np.pi * t * np.eye(d))


def _cos_sin(theta: float) -> tuple:
    # exact values on multiples of pi/2 so that sin(k pi) is zero, not 1e-16
    k = theta / (np.pi / 2)
    kr = round(k)
    if abs(k - kr) < 1e-12:
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][kr % 4]
    return float(np.cos(theta)), float(np.sin(theta))


def harmonic_oscillator(d: int, omega: float, t: float) -> SymplecticMatrix:
    """Propagator of H = -(1/pi) Delta + pi omega^2 |x|^2 at time t."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    c, s = _cos_sin(omega * t)
    eye = np.eye(d)
    return SymplecticMatrix.from_blocks(c * eye, s / omega * eye, -omega * s * eye, c * eye)


CONSTRUCTORS = {
    "fourier": fourier,
    "chirp": chirp,
    "rescale": rescale,
    "multiplier": multiplier,
    "partial_fourier": partial_fourier,
    "free_particle": free_particle,
    "harmonic_oscillator": harmonic_oscillator,
}


def from_config(spec: dict) -> SymplecticMatrix:
    """Build an operator from ``{"name": ..., **params}`` or explicit blocks.

    A ``"compose"`` key holding a list of such dicts multiplies them left to right.
    """
    if "compose" in spec:
        mats = [from_config(s) for s in spec["compose"]]
        out = mats[0]
        for m in mats[1:]:
            out = out @ m
        return out
    if "A" in spec:
        return SymplecticMatrix.from_blocks(spec["A"], spec["B"], spec["C"], spec["D"])
    params = dict(spec)
    name = params.pop("name")
    if name not in CONSTRUCTORS:
        raise KeyError(f"unknown operator {name!r}; known: {sorted(CONSTRUCTORS)}")
    if name == "partial_fourier" and "indices" in params:
        params["indices"] = list(params["indices"])
    return CONSTRUCTORS[name](**params)
