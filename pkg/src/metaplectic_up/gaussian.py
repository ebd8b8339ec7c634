"""Closed-form chirped Gaussians and their metaplectic images.

A :class:`GaussianState` is ``c * exp(i pi Z x.x + 2 pi i w.x)`` with Z complex
symmetric and Im Z positive definite.  Metaplectic operators act by

    Z -> (C + D Z)(A + B Z)^{-1},   w -> (A + B Z)^{-T} w,

and the amplitude is read off the integral representation at the origin, so
the image is exact up to the usual global sign.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .symplectic import (NoUncertaintyError, SubspaceFrame, SymplecticMatrix,
                         build_frame, constants)


class ConditioningError(ArithmeticError):
    pass


def _sqrt_det(M: np.ndarray) -> complex:
    # product of principal square roots of the eigenvalues; continuous on Re M > 0
    if M.size == 0:
        return 1.0 + 0j
    return complex(np.prod(np.sqrt(np.linalg.eigvals(M).astype(complex))))


@dataclass(frozen=True)
class GaussianState:
    Z: np.ndarray
    w: np.ndarray
    c: complex = 1.0

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.Z, dtype=complex))
        Z = 0.5 * (Z + Z.T)
        w = np.asarray(self.w, dtype=complex).reshape(-1)
        if Z.shape != (w.size, w.size):
            raise ValueError(f"Z has shape {Z.shape} but w has length {w.size}")
        lam = np.linalg.eigvalsh(Z.imag)
        if lam[0] <= 0:
            raise ValueError(f"Im Z must be positive definite (min eigenvalue {lam[0]:.3e})")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c", complex(self.c))

    @classmethod
    def isotropic(cls, d: int, gamma: float = np.pi, center=None, freq=None):
        """exp(2 pi i freq.x) exp(-gamma |x - center|^2)."""
        center = np.zeros(d) if center is None else np.asarray(center, float)
        freq = np.zeros(d) if freq is None else np.asarray(freq, float)
        Z = 1j * gamma / np.pi * np.eye(d)
        # -gamma|x-a|^2 = -gamma|x|^2 + 2 gamma a.x - gamma|a|^2
        w = freq - 1j * gamma * center / np.pi
        return cls(Z, w, np.exp(-gamma * center @ center))

    @property
    def d(self) -> int:
        return self.w.size

    def exponent(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        quad = np.einsum("...i,ij,...j->...", x, self.Z, x)
        return 1j * np.pi * quad + 2j * np.pi * (x @ self.w)

    def __call__(self, x) -> np.ndarray:
        return self.c * np.exp(self.exponent(x))

    def log_abs(self, x) -> np.ndarray:
        return np.log(abs(self.c)) + self.exponent(x).real

    # |g|^2 is an unnormalised Gaussian density with precision 4 pi Im Z
    @property
    def mean(self) -> np.ndarray:
        return -np.linalg.solve(self.Z.imag, self.w.imag)

    @property
    def cov(self) -> np.ndarray:
        return np.linalg.inv(4 * np.pi * self.Z.imag)

    def norm2(self) -> float:
        Y, v = self.Z.imag, self.w.imag
        return float(abs(self.c) ** 2 * np.exp(2 * np.pi * v @ np.linalg.solve(Y, v))
                     / np.sqrt(np.linalg.det(2 * Y)))

    def scaled(self, factor: complex) -> "GaussianState":
        return GaussianState(self.Z, self.w, self.c * factor)

    def to_json(self) -> str:
        return json.dumps({"Z_re": self.Z.real.tolist(), "Z_im": self.Z.imag.tolist(),
                           "w_re": self.w.real.tolist(), "w_im": self.w.imag.tolist(),
                           "c_re": self.c.real, "c_im": self.c.imag})

    @classmethod
    def from_json(cls, text) -> "GaussianState":
        o = json.loads(text) if isinstance(text, str) else text
        Z = np.asarray(o["Z_re"], float) + 1j * np.asarray(o["Z_im"], float)
        w = np.asarray(o["w_re"], float) + 1j * np.asarray(o["w_im"], float)
        return cls(Z, w, complex(o.get("c_re", 1.0), o.get("c_im", 0.0)))


def evaluate(g, x) -> np.ndarray:
    return g(x)


def _image_data(S: SymplecticMatrix, g: GaussianState, frame: SubspaceFrame | None = None):
    """(Z', L, N, c0) with L = (A+BZ)^{-1} and Sg(xi) = c0 exp(-i pi w.Nw) ..."""
    A, B, C, D = S.A, S.B, S.C, S.D
    Z = g.Z
    P = A + B @ Z
    if np.linalg.cond(P) > 1e12:
        raise ConditioningError("A + BZ is numerically singular")
    L = np.linalg.inv(P)
    Zp = (C + D @ Z) @ L
    if frame is None:
        frame = build_frame(S)
    if frame.r == 0:
        N = np.zeros((g.d, g.d), complex)
        c0 = g.c / np.sqrt(complex(np.linalg.det(A)))
    else:
        V = frame.V
        BpA = frame.B_pinv @ A
        M = V.T @ (Z + 0.5 * (BpA + BpA.T)) @ V
        N = V @ np.linalg.solve(M, V.T)
        mu = constants(S, frame).mu_S
        c0 = mu * g.c / _sqrt_det(-1j * M)
    return Zp, L, N, c0


def transform_gaussian(S: SymplecticMatrix, g: GaussianState,
                       frame: SubspaceFrame | None = None) -> GaussianState:
    """Closed-form image of a Gaussian under the metaplectic operator of S."""
    if S.d != g.d:
        raise ValueError("dimension mismatch")
    Zp, L, N, c0 = _image_data(S, g, frame)
    wp = L.T @ g.w
    cp = c0 * np.exp(-1j * np.pi * g.w @ N @ g.w)
    return GaussianState(Zp, wp, cp)


@dataclass(frozen=True)
class PolyGaussian:
    """p(T x + t0) * base(x), with p given as {multi-index: coefficient}."""

    base: GaussianState
    coeffs: dict
    T: np.ndarray = None
    t0: np.ndarray = None

    def __post_init__(self):
        d = self.base.d
        T = np.eye(d) if self.T is None else np.atleast_2d(np.asarray(self.T))
        t0 = np.zeros(T.shape[0]) if self.t0 is None else np.asarray(self.t0).reshape(-1)
        coeffs = {tuple(int(a) for a in k): complex(v) for k, v in dict(self.coeffs).items()}
        for k, v in coeffs.items():
            if len(k) != T.shape[0] or min(k, default=0) < 0:
                raise ValueError(f"bad multi-index {k}")
            if not np.isfinite(v):
                raise ValueError("non-finite coefficient")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def degree(self) -> int:
        return max((sum(k) for k, v in self.coeffs.items() if v != 0), default=0)

    def poly(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=float) @ self.T.T + self.t0
        out = np.zeros(y.shape[:-1], dtype=complex)
        for k, v in self.coeffs.items():
            out = out + v * np.prod(y ** np.asarray(k), axis=-1)
        return out

    def __call__(self, x) -> np.ndarray:
        return self.poly(x) * self.base(x)

    def log_abs(self, x) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.poly(x))) + self.base.log_abs(x)

    @classmethod
    def on_frame(cls, base: GaussianState, frame: SubspaceFrame, coeffs: dict):
        """Polynomial in the ker(B)^perp coordinates u = V^T x1."""
        return cls(base, coeffs, T=frame.x1_coords)


def _apply_linear_form(h: dict, t: np.ndarray, N: np.ndarray) -> dict:
    # h <- (t.l) h - (1/2 pi i) sum_m (N t)_m dh/dl_m
    d = t.size
    Nt = N @ t
    out: dict = {}
    for k, v in h.items():
        for m in range(d):
            if t[m] != 0:
                up = list(k)
                up[m] += 1
                out[tuple(up)] = out.get(tuple(up), 0) + t[m] * v
            if k[m] > 0 and Nt[m] != 0:
                dn = list(k)
                dn[m] -= 1
                out[tuple(dn)] = out.get(tuple(dn), 0) - Nt[m] * k[m] * v / (2j * np.pi)
    return out


def transform_poly_gaussian(S: SymplecticMatrix, f: PolyGaussian,
                            frame: SubspaceFrame | None = None) -> PolyGaussian:
    """Exact image of polynomial x Gaussian via w-derivatives of the Gaussian image."""
    g = f.base
    d = g.d
    Zp, L, N, c0 = _image_data(S, g, frame)
    image = transform_gaussian(S, g, frame)
    total: dict = {}
    for k, coef in f.coeffs.items():
        # (T x + t0)^k as a product of affine forms; the constant part is a scalar
        h = {(0,) * d: 1.0 + 0j}
        for row, power in zip(range(len(k)), k):
            for _ in range(power):
                lin = _apply_linear_form(h, f.T[row].astype(complex), N)
                for key, v in h.items():
                    lin[key] = lin.get(key, 0) + f.t0[row] * v
                h = lin
        for key, v in h.items():
            total[key] = total.get(key, 0) + coef * v
    # output polynomial variables: l = L xi - N w
    return PolyGaussian(image, total, T=L, t0=-(N @ g.w))


def gaussian_moments(g: GaussianState, a, b: float = 0.0, center: float = 0.0) -> float:
    """int |a.x + b - center|^2 |g(x)|^2 dx in closed form."""
    a = np.asarray(a, dtype=float).reshape(-1)
    m = a @ g.mean + b - center
    return g.norm2() * float(m ** 2 + a @ g.cov @ a)


def gaussian_mean(g: GaussianState, a, b: float = 0.0) -> float:
    return float(np.asarray(a, float) @ g.mean + b)


def _frame_quadratic_forms(S: SymplecticMatrix, frame: SubspaceFrame):
    """Matrices of the compensating chirp x -> pi(B^+ A x1.x1 + 2 C^T xi2.x1)."""
    Px, Qx = frame.x1_coords, frame.x2_coords
    V, W = frame.V, frame.W
    BpA = frame.B_pinv @ S.A
    x1 = V @ Px                      # x -> x1
    xi2 = S.A @ W @ Qx               # x -> xi2, with x2 = D^T xi2
    quad = x1.T @ (0.5 * (BpA + BpA.T)) @ x1
    cross = xi2.T @ S.C @ x1         # x -> C^T xi2 . x1
    return quad + cross + cross.T


def extremizer_state(S: SymplecticMatrix, frame: SubspaceFrame, alpha, beta, gamma,
                     theta=np.pi) -> GaussianState:
    """Theta(x2) * exp(2 pi i beta.u - sum gamma_j (u_j - alpha_j)^2) * chirp.

    ``u = V^T x1`` are the ker(B)^perp coordinates, ``Theta`` is
    ``exp(-theta |t|^2)`` in the coordinates x2 = D^T A W t, and the chirp
    undoes the phase of the integral representation.
    """
    r = frame.r
    if r == 0:
        raise NoUncertaintyError("B = 0: no uncertainty directions")
    alpha = np.broadcast_to(np.asarray(alpha, float), (r,))
    beta = np.broadcast_to(np.asarray(beta, float), (r,))
    gamma = np.broadcast_to(np.asarray(gamma, float), (r,))
    if np.any(gamma <= 0):
        raise ValueError("gamma must be positive")
    Px, Qx = frame.x1_coords, frame.x2_coords
    decay = Px.T @ np.diag(gamma) @ Px
    if Qx.shape[0]:
        th = np.atleast_2d(theta) * np.eye(Qx.shape[0]) if np.ndim(theta) == 0 else np.asarray(theta)
        decay = decay + Qx.T @ th @ Qx
    Z = 1j * decay / np.pi - _frame_quadratic_forms(S, frame)
    w = Px.T @ (beta - 1j * gamma * alpha / np.pi)
    c = np.exp(-np.sum(gamma * alpha ** 2))
    return GaussianState(Z, w, c)


def build_extremizer_directional(S: SymplecticMatrix, frame: SubspaceFrame, j: int,
                                 alpha: float = 0.0, beta: float = 0.0, gamma: float = np.pi,
                                 theta=np.pi, G_widths=None) -> GaussianState:
    """Equality case of the directional inequality along direction ``j`` (1-based).

    G_j is taken Gaussian, ``exp(-sum_{i != j} G_widths_i u_i^2)``, so the
    result is a single GaussianState.
    """
    r = frame.r
    if r == 0:
        raise NoUncertaintyError("B = 0: no uncertainty directions")
    if not 1 <= j <= r:
        raise ValueError(f"direction j={j} outside 1..{r}")
    widths = np.full(r, np.pi) if G_widths is None else np.broadcast_to(
        np.asarray(G_widths, float), (r,)).copy()
    widths[j - 1] = gamma
    a = np.zeros(r)
    b = np.zeros(r)
    a[j - 1], b[j - 1] = alpha, beta
    return extremizer_state(S, frame, a, b, widths, theta)


def extremizer_evaluator(S: SymplecticMatrix, frame: SubspaceFrame, j: int, alpha: float,
                         beta: float, gamma: float, theta_fn, G_fn=None):
    """Pointwise extremizer with an arbitrary profile ``theta_fn(t)`` along D^T A ker(B)."""
    r = frame.r
    if not 1 <= j <= r:
        raise ValueError(f"direction j={j} outside 1..{r}")
    Qmat = _frame_quadratic_forms(S, frame)
    Px, Qx = frame.x1_coords, frame.x2_coords

    def f(x):
        x = np.asarray(x, dtype=float)
        u = x @ Px.T
        t = x @ Qx.T
        uj = u[..., j - 1]
        others = np.delete(u, j - 1, axis=-1)
        G = np.exp(-np.pi * np.sum(others ** 2, axis=-1)) if G_fn is None else G_fn(others)
        chirp = np.exp(-1j * np.pi * np.einsum("...i,ij,...j->...", x, Qmat, x))
        return theta_fn(t) * G * np.exp(2j * np.pi * beta * uj - gamma * (uj - alpha) ** 2) * chirp

    return f


def gamma_for_sharpness(S: SymplecticMatrix, frame: SubspaceFrame, c: float = 1.0) -> np.ndarray:
    """gamma_j = pi / (c sigma_j(B) sqrt(sigma(B)) mu_S), on an eigen-ordered frame."""
    if c <= 0:
        raise ValueError("c must be positive")
    if frame.r == 0:
        raise NoUncertaintyError("B = 0: no uncertainty directions")
    sv = frame.singular_values
    if np.any(sv <= 0):
        raise ValueError("frame contains a zero singular value")
    k = constants(S, frame)
    return np.pi / (c * sv * np.sqrt(k.sigma_B) * k.mu_S)


def random_gaussian(rng: np.random.Generator, d: int, width=(0.6, 1.8), chirp: float = 0.5,
                    shift: float = 0.5) -> GaussianState:
    """A resolved random Gaussian for property tests and CLI presets."""
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    Y = Q @ np.diag(rng.uniform(*width, size=d)) @ Q.T
    X = rng.uniform(-chirp, chirp, size=(d, d))
    Z = 0.5 * (X + X.T) + 1j * Y
    mean = rng.uniform(-shift, shift, size=d)
    w = rng.uniform(-shift, shift, size=d) - 1j * (Y @ mean)   # mean = -Y^{-1} Im w
    return GaussianState(Z, w, np.exp(1j * rng.uniform(-np.pi, np.pi)))
