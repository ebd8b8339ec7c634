"""Symplectic matrices, the subspace frame of the B block, and the geometric
constants that normalise metaplectic operators and Heisenberg bounds.

Block convention::

    S = [[A, B],
         [C, D]]      with  S^T J S = J,   J = [[0, I], [-I, 0]].
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-10


class SymplecticError(ValueError):
    """Raised for malformed or non-symplectic input."""


class SingularityError(ArithmeticError):
    """Raised when a geometric volume factor vanishes."""


class NoUncertaintyError(ValueError):
    """Raised when B = 0, where no uncertainty principle holds."""


def standard_form(d: int) -> np.ndarray:
    """The standard symplectic form J of R^{2d}."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def validate_symplectic(M, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``max|M^T J M - J| <= tol``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SymplecticError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] % 2:
        raise SymplecticError(f"symplectic matrices have even side, got {M.shape[0]}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    J = standard_form(M.shape[0] // 2)
    return bool(np.max(np.abs(M.T @ J @ M - J)) <= tol)


@dataclass(frozen=True)
class SymplecticMatrix:
    """A validated 2d x 2d real symplectic matrix."""

    entries: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        M = np.array(self.entries, dtype=float)
        if not validate_symplectic(M, self.tol):
            J = standard_form(M.shape[0] // 2)
            err = np.max(np.abs(M.T @ J @ M - J))
            raise SymplecticError(f"matrix is not symplectic: |S^T J S - J|_max = {err:.3e}")
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)

    @classmethod
    def from_blocks(cls, A, B, C, D, tol: float = DEFAULT_TOL) -> "SymplecticMatrix":
        return cls(np.block([[np.atleast_2d(A), np.atleast_2d(B)],
                             [np.atleast_2d(C), np.atleast_2d(D)]]), tol)

    @property
    def d(self) -> int:
        return self.entries.shape[0] // 2

    @property
    def A(self) -> np.ndarray:
        return self.entries[: self.d, : self.d]

    @property
    def B(self) -> np.ndarray:
        return self.entries[: self.d, self.d:]

    @property
    def C(self) -> np.ndarray:
        return self.entries[self.d:, : self.d]

    @property
    def D(self) -> np.ndarray:
        return self.entries[self.d:, self.d:]

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        tol = max(self.tol, other.tol) * 10
        return SymplecticMatrix(self.entries @ other.entries, tol)

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "A": self.A.tolist(), "B": self.B.tolist(),
                           "C": self.C.tolist(), "D": self.D.tolist()})

    @classmethod
    def from_json(cls, text) -> "SymplecticMatrix":
        obj = json.loads(text) if isinstance(text, str) else text
        S = cls.from_blocks(obj["A"], obj["B"], obj["C"], obj["D"])
        if S.d != int(obj["d"]):
            raise SymplecticError(f"declared d={obj['d']} but blocks have size {S.d}")
        return S


def symplectic_inverse(S: SymplecticMatrix) -> SymplecticMatrix:
    """S^{-1} = -J S^T J."""
    J = standard_form(S.d)
    return SymplecticMatrix(-J @ S.entries.T @ J, S.tol)


def _orth_sign(Q: np.ndarray) -> np.ndarray:
    # first entry with non-negligible modulus in each column made positive
    Q = Q.copy()
    for k in range(Q.shape[1]):
        col = Q[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size and col[idx[0]] < 0:
            Q[:, k] = -col
    return Q


@dataclass(frozen=True)
class SubspaceFrame:
    """Orthonormal bases attached to the B block of S.

    ``V`` spans ker(B)^perp, ``W`` spans ker(B), ``U`` spans R(B) and ``U_perp``
    spans R(B)^perp.  The oblique splittings

        x  = x1 + x2,   x1 in ker(B)^perp,  x2 in D^T A(ker B)
        xi = xi1 + xi2, xi1 in R(B),         xi2 in A(ker B)

    are exposed through the coordinate maps ``x1_coords`` (x -> V^T x1),
    ``x2_coords`` (x -> t with x2 = D^T A W t), ``xi1_coords``
    (xi -> V^T B^+ xi1) and ``xi2_coords`` (xi -> t with xi2 = A W t).
    """

    r: int
    V: np.ndarray
    W: np.ndarray
    U: np.ndarray
    U_perp: np.ndarray
    B_pinv: np.ndarray
    singular_values: np.ndarray
    ordering: str
    x1_coords: np.ndarray
    x2_coords: np.ndarray
    xi1_coords: np.ndarray
    xi2_coords: np.ndarray
    no_uncertainty: bool = field(default=False)

    @property
    def d(self) -> int:
        return self.V.shape[0]

    @property
    def sigma_B(self) -> float:
        return float(np.prod(self.singular_values))


def numerical_rank_cutoff(S: SymplecticMatrix, rank_tol: float) -> float:
    sv = np.linalg.svd(S.B, compute_uv=False)
    scale = max(sv[0] if sv.size else 0.0, np.linalg.norm(S.entries, 2))
    return rank_tol * scale


def build_frame(S: SymplecticMatrix, rank_tol: float = DEFAULT_RANK_TOL,
                ordering: str = "svd") -> SubspaceFrame:
    """Numerical-rank SVD of B and the bases and coordinate maps built on it.

    ``ordering`` selects how the columns of V are arranged:

    * ``"svd"``: right singular vectors, singular values descending;
    * ``"eigen"``: eigenvectors of B^T B on ker(B)^perp, eigenvalues ascending;
    * ``"axis"``: coordinate vectors, allowed only when ker(B)^perp is spanned
      by coordinate axes.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    d = S.d
    A, B, D = S.A, S.B, S.D
    Ub, sv, Vbt = np.linalg.svd(B)
    cutoff = numerical_rank_cutoff(S, rank_tol)
    r = int(np.sum(sv > cutoff))
    Vfull = Vbt.T

    if ordering == "svd":
        V = _orth_sign(Vfull[:, :r])
    elif ordering == "eigen":
        lam, vecs = np.linalg.eigh(B.T @ B)
        # top-r eigenvectors span ker(B)^perp; order them ascending
        V = _orth_sign(vecs[:, d - r:])
    elif ordering == "axis":
        support = np.flatnonzero(np.linalg.norm(B, axis=0) > cutoff)
        rest = np.setdiff1d(np.arange(d), support)
        if support.size != r or (rest.size and np.linalg.norm(B[:, rest]) > cutoff):
            raise SymplecticError("ker(B) is not spanned by coordinate axes")
        V = np.eye(d)[:, support]
    else:
        raise ValueError(f"unknown ordering {ordering!r}")

    W = np.eye(d)[:, rest] if ordering == "axis" else _orth_sign(Vfull[:, r:])
    U = _orth_sign(Ub[:, :r])
    U_perp = _orth_sign(Ub[:, r:])
    inv_sv = np.array([1.0 / s if s > cutoff else 0.0 for s in sv])
    B_pinv = Vfull @ np.diag(inv_sv) @ Ub.T
    if ordering == "eigen":
        singular_values = np.linalg.norm(B @ V, axis=0)
    else:
        singular_values = np.linalg.svd(B @ V, compute_uv=False) if r else np.zeros(0)

    # oblique splittings; both bases are invertible for every symplectic S
    xbasis = np.hstack([V, D.T @ A @ W])
    xibasis = np.hstack([U, A @ W])
    for name, basis in (("ker(B)^perp + D^T A ker(B)", xbasis), ("R(B) + A ker(B)", xibasis)):
        if np.linalg.matrix_rank(basis) < d:
            raise SingularityError(f"decomposition {name} is not direct at this tolerance")
    xinv = np.linalg.inv(xbasis)
    xiinv = np.linalg.inv(xibasis)
    xi1 = U @ xiinv[:r]
    return SubspaceFrame(
        r=r, V=V, W=W, U=U, U_perp=U_perp, B_pinv=B_pinv,
        singular_values=singular_values, ordering=ordering,
        x1_coords=xinv[:r], x2_coords=xinv[r:],
        xi1_coords=V.T @ B_pinv @ xi1, xi2_coords=xiinv[r:],
        no_uncertainty=(r == 0),
    )


def q_volume(A, E, tol: float = 1e-8) -> float:
    """Volume sqrt(det(E^T A^T A E)) of the image of the unit cube of span(E)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    E = np.asarray(E, dtype=float).reshape(A.shape[1], -1)
    ell = E.shape[1]
    if ell == 0:
        return 1.0
    if np.max(np.abs(E.T @ E - np.eye(ell))) > tol:
        raise ValueError("E must have orthonormal columns")
    G = (A @ E).T @ (A @ E)
    return float(np.sqrt(max(np.linalg.det(G), 0.0)))


@dataclass(frozen=True)
class MetaplecticConstants:
    sigma_B: float
    q_RBperp_AT: float
    q_kerB_DTA: float
    q_RBperp_AAT: float
    q_kerB_A: float
    mu_S: float
    K_S: float

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def constants(S: SymplecticMatrix, frame: SubspaceFrame | None = None) -> MetaplecticConstants:
    """mu_S, K_S and the volume factors they are built from."""
    if frame is None:
        frame = build_frame(S)
    A, D = S.A, S.D
    q = {
        "q_RBperp_AT": q_volume(A.T, frame.U_perp),
        "q_kerB_DTA": q_volume(D.T @ A, frame.W),
        "q_RBperp_AAT": q_volume(A @ A.T, frame.U_perp),
        "q_kerB_A": q_volume(A, frame.W),
    }
    scale = max(1.0, np.linalg.norm(S.entries, 2))
    for name, val in q.items():
        if not val > 1e-13 * scale:
            raise SingularityError(f"{name} vanishes ({val:.3e})")
    sigma_B = frame.sigma_B
    mu = np.sqrt(1.0 / (q["q_RBperp_AT"] * sigma_B))
    K = np.sqrt(q["q_RBperp_AAT"]) / (q["q_RBperp_AT"] * np.sqrt(q["q_kerB_DTA"]))
    return MetaplecticConstants(sigma_B=sigma_B, mu_S=float(mu), K_S=float(K), **q)


def _restricted_cond(M: np.ndarray, basis: np.ndarray) -> float | None:
    if basis.shape[1] == 0:
        return None
    sv = np.linalg.svd(M @ basis, compute_uv=False)
    return float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")


def check_lemma_isomorphisms(S: SymplecticMatrix, frame: SubspaceFrame) -> dict:
    """Condition numbers of D^T A on ker B, D^T on A(ker B), A^T on R(B)^perp.

    ``None`` marks a trivial (zero-dimensional) domain.
    """
    A, D = S.A, S.D
    AW = A @ frame.W
    Q, _ = np.linalg.qr(AW) if AW.shape[1] else (AW, None)
    return {
        "DTA_on_kerB": _restricted_cond(D.T @ A, frame.W),
        "DT_on_A_kerB": _restricted_cond(D.T, Q),
        "AT_on_RBperp": _restricted_cond(A.T, frame.U_perp),
    }
