"""Apply metaplectic operators to grid functions.

Both execution modes evaluate the same integral representation

    Sf(xi) = mu_S exp(i pi (D B^+ xi1.xi1 + D C^T xi2.xi2))
             * int_{ker(B)^perp} f(t + D^T xi2) exp(i pi B^+ A t.t)
                                 exp(-2 pi i (B^+ xi1 - C^T xi2).t) dt

with xi = xi1 + xi2 in R(B) + A(ker B).  ``quadrature`` sums it directly for
every output point (reading f off the nodes by quintic B-splines and
refining the t-step until the sum is alias free); ``chirp_fft``
evaluates each xi2 slice with one FFT and needs ker(B) spanned by coordinate
axes.  When B = 0 the operator is the rescaled chirp
det(A)^{-1/2} exp(i pi C A^{-1} x.x) f(A^{-1} x).

Results agree up to one global unimodular constant.

Grid offsets: on an input axis x_k = x0 + k h the DFT dual frequencies are
eta_m = eta0 + m / (n h) with eta0 = -(n // 2) / (n h), and

    h sum_k g(x_k) exp(-2 pi i eta_m x_k)
      = h exp(-2 pi i eta_m x0) FFT[g_k exp(-2 pi i eta0 k h)]_m .
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .grid import GridFunction, GridSpec, inner, l2_norm
from .symplectic import (DEFAULT_RANK_TOL, MetaplecticConstants, SubspaceFrame,
                         SymplecticMatrix, SymplecticError, build_frame, constants,
                         numerical_rank_cutoff)

MODES = ("quadrature", "chirp_fft")


class UnsupportedModeError(ValueError):
    pass


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class AxisLayout:
    """Axis bookkeeping of the fast path: B = diag(b) on ``J``, zero elsewhere."""

    J: tuple
    K: tuple
    b: np.ndarray
    dK: np.ndarray
    aK: np.ndarray


@dataclass(frozen=True)
class TransformPlan:
    S: SymplecticMatrix
    frame: SubspaceFrame
    constants: MetaplecticConstants | None
    input_spec: GridSpec
    output_spec: GridSpec
    mode: str
    axis_aligned: bool
    layout: AxisLayout | None = field(default=None, repr=False)


def _is_diag(M: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(M - np.diag(np.diag(M))), initial=0.0) <= tol)


def axis_layout(S: SymplecticMatrix, rank_tol: float = DEFAULT_RANK_TOL) -> AxisLayout | None:
    """Return the coordinate-axis structure the fast path needs, or None.

    Required: B vanishes outside a diagonal J x J block, A maps the kernel
    axes K into themselves (A[J, K] = 0), D^T keeps them (D[K, J] = 0) and
    D[K, K] is diagonal.  For B = 0 the requirement is A diagonal.
    """
    d = S.d
    A, B, D = S.A, S.B, S.D
    tol = numerical_rank_cutoff(S, rank_tol)
    J = tuple(int(i) for i in np.flatnonzero(np.abs(np.diag(B)) > tol))
    K = tuple(i for i in range(d) if i not in J)
    mask = np.zeros((d, d), bool)
    for j in J:
        mask[j, j] = True
    if np.max(np.abs(B[~mask]), initial=0.0) > tol:
        return None
    if not J:
        if not _is_diag(A, tol):
            return None
        return AxisLayout((), K, np.zeros(0), np.diag(D).copy(), np.diag(A).copy())
    Ji, Ki = list(J), list(K)
    if K:
        if np.max(np.abs(A[np.ix_(Ji, Ki)])) > tol or np.max(np.abs(D[np.ix_(Ki, Ji)])) > tol:
            return None
        if not _is_diag(D[np.ix_(Ki, Ki)], tol):
            return None
    return AxisLayout(J, K, np.diag(B)[Ji].copy(), np.diag(D)[Ki].copy() if K else np.zeros(0),
                      np.diag(A)[Ki].copy() if K else np.zeros(0))


def _axis_spec(n, lo, h, scale):
    # grid {scale * (lo + k h)} sorted increasingly
    if scale > 0:
        return lo * scale, h * scale
    return (lo + (n - 1) * h) * scale, -h * scale


def default_output_spec(S: SymplecticMatrix, spec: GridSpec, layout: AxisLayout | None) -> GridSpec:
    """DFT-dual grid on the R(B) axes, the input grid mapped by D^{-T} / A on the others."""
    if layout is None:
        return spec
    n, lo, step = list(spec.n), list(spec.min), list(spec.step)
    for j, b in zip(layout.J, layout.b):
        deta = 1.0 / (spec.n[j] * spec.step[j])
        eta0 = -(spec.n[j] // 2) * deta
        lo[j], step[j] = _axis_spec(spec.n[j], eta0, deta, b)
    if not layout.J:
        for k, a in zip(layout.K, layout.aK):
            lo[k], step[k] = _axis_spec(spec.n[k], spec.min[k], spec.step[k], a)
    else:
        for k, dk in zip(layout.K, layout.dK):
            lo[k], step[k] = _axis_spec(spec.n[k], spec.min[k], spec.step[k], 1.0 / dk)
    return GridSpec(tuple(n), tuple(lo), tuple(step), spec.budget)


def make_plan(S: SymplecticMatrix, input_spec: GridSpec, mode: str = "chirp_fft",
              output_spec: GridSpec | None = None, rank_tol: float = DEFAULT_RANK_TOL) -> TransformPlan:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if input_spec.d != S.d:
        raise ValueError("grid dimension does not match the operator")
    layout = axis_layout(S, rank_tol)
    if mode == "chirp_fft" and layout is None:
        raise UnsupportedModeError("ker(B) is not axis aligned; use mode='quadrature'")
    try:
        frame = build_frame(S, rank_tol, "axis" if layout is not None else "svd")
    except SymplecticError:
        frame = build_frame(S, rank_tol)
    k = constants(S, frame) if frame.r else None
    derived = default_output_spec(S, input_spec, layout)
    if output_spec is None:
        output_spec = derived
    elif mode == "chirp_fft" and output_spec != derived:
        raise UnsupportedModeError("chirp_fft writes onto its derived output grid only")
    return TransformPlan(S, frame, k, input_spec, output_spec, mode, layout is not None, layout)


def _info(plan: TransformPlan, f: GridFunction, out: GridFunction, interpolated: bool) -> dict:
    nf = l2_norm(f)
    clipped = max(0.0, 1.0 - (l2_norm(out) / nf) ** 2) if nf > 0 else 0.0
    return {"clipped_mass": clipped, "interpolated": interpolated, "mode": plan.mode}


def _interpolator(f: GridFunction, order: int = 5):
    """Off-node evaluation by B-spline interpolation, zero outside the grid."""
    lo = np.asarray(f.spec.min)
    h = np.asarray(f.spec.step)
    coef_re = ndimage.spline_filter(f.values.real, order=order, mode="grid-constant")
    coef_im = ndimage.spline_filter(f.values.imag, order=order, mode="grid-constant")

    def evaluate(pts):
        idx = ((np.asarray(pts) - lo) / h).T
        kw = dict(order=order, mode="grid-constant", cval=0.0, prefilter=False)
        return (ndimage.map_coordinates(coef_re, idx, **kw)
                + 1j * ndimage.map_coordinates(coef_im, idx, **kw))

    return evaluate


def _rescale_branch(plan: TransformPlan, f: GridFunction, pts: np.ndarray) -> np.ndarray:
    S = plan.S
    Ainv = np.linalg.inv(S.A)
    y = pts @ Ainv.T
    amp = 1.0 / np.sqrt(complex(np.linalg.det(S.A)))
    CAi = S.C @ Ainv
    chirp = np.exp(1j * np.pi * np.einsum("...i,ij,...j->...", pts, CAi, pts))
    return amp * chirp * (_node_values(f, y) if _on_nodes(f, y) else _interpolator(f)(y))


def _node_values(f: GridFunction, pts: np.ndarray) -> np.ndarray:
    # exact samples at grid nodes, zero off the grid
    idx = np.round((pts - np.asarray(f.spec.min)) / np.asarray(f.spec.step)).astype(np.int64)
    n = np.asarray(f.spec.n)
    inside = np.all((idx >= 0) & (idx < n), axis=-1)
    out = np.zeros(pts.shape[:-1], dtype=complex)
    out[inside] = f.values[tuple(idx[inside].T)]
    return out


def _on_nodes(f: GridFunction, pts: np.ndarray) -> bool:
    idx = (pts - np.asarray(f.spec.min)) / np.asarray(f.spec.step)
    return bool(np.allclose(idx, np.round(idx), atol=1e-9))


def apply_quadrature(plan: TransformPlan, f: GridFunction, return_info: bool = False,
                     chunk: int = 2 ** 22):
    """Direct summation of the integral representation at every output point."""
    if f.spec != plan.input_spec:
        raise ValueError("input grid does not match the plan")
    S, fr = plan.S, plan.frame
    A, C, D = S.A, S.C, S.D
    out_pts = plan.output_spec.points().reshape(-1, S.d)

    if fr.r == 0:
        vals = _rescale_branch(plan, f, out_pts)
        out = GridFunction(plan.output_spec, vals.reshape(plan.output_spec.shape))
        interp = not _on_nodes(f, out_pts @ np.linalg.inv(A).T)
        return (out, _info(plan, f, out, interp)) if return_info else out

    V, Bp = fr.V, fr.B_pinv
    r = fr.r
    coeff = np.hstack([fr.U, A @ fr.W])
    ab = np.linalg.solve(coeff, out_pts.T).T
    xi1 = ab[:, :r] @ fr.U.T
    xi2 = ab[:, r:] @ (A @ fr.W).T
    shifts = xi2 @ D                      # rows: D^T xi2

    if plan.axis_aligned:
        u_axes = [f.spec.min[j] + f.spec.step[j] * np.arange(f.spec.n[j]) for j in plan.layout.J]
        du = np.prod([f.spec.step[j] for j in plan.layout.J])
    else:
        corners = np.array(np.meshgrid(*[[lo, lo + (n - 1) * h] for n, lo, h in
                                         zip(f.spec.n, f.spec.min, f.spec.step)],
                                       indexing="ij")).reshape(S.d, -1).T
        proj = corners @ V
        sproj = shifts @ V
        lo = proj.min(axis=0) - sproj.max(axis=0)
        hi = proj.max(axis=0) - sproj.min(axis=0)
        # Poisson aliasing: replicas sit at multiples of 1/h_u, so 1/h_u must
        # exceed output frequency + input band + local chirp frequency
        fu = np.abs((xi1 @ Bp.T - xi2 @ S.C) @ V).max(axis=0)
        band = 0.5 / min(f.spec.step)
        M = V.T @ (0.5 * (Bp @ A + (Bp @ A).T)) @ V
        reach = np.maximum(np.abs(lo), np.abs(hi))
        chirp_bw = np.abs(M) @ reach
        hu = np.minimum(min(f.spec.step), 1.0 / (fu + 2 * band + chirp_bw))
        u_axes = [np.arange(a, b + s / 2, s) for a, b, s in zip(lo, hi, hu)]
        du = float(np.prod(hu))
    U_pts = np.stack(np.meshgrid(*u_axes, indexing="ij"), -1).reshape(-1, r)
    T = U_pts @ V.T                       # t = V u
    BpA = Bp @ A
    inner_chirp = np.exp(1j * np.pi * np.einsum("ni,ij,nj->n", T, BpA, T))
    freq = (xi1 @ Bp.T - xi2 @ C) @ V     # V^T (B^+ xi1 - C^T xi2)
    outer = np.exp(1j * np.pi * (np.einsum("ni,ij,nj->n", xi1, D @ Bp, xi1)
                                 + np.einsum("ni,ij,nj->n", xi2, D @ C.T, xi2)))
    interp = _interpolator(f)
    vals = np.empty(out_pts.shape[0], complex)
    on_nodes = True
    # outputs sharing xi2 share the integrand; the phase factorises over the u axes
    key = np.round(ab[:, r:] / (1e-9 * max(1.0, np.abs(ab[:, r:]).max(initial=0.0))))
    _, groups = np.unique(key, axis=0, return_inverse=True)
    groups = groups.reshape(-1)
    order = np.argsort(groups, kind="stable")
    bounds = np.flatnonzero(np.diff(groups[order])) + 1
    shape = tuple(len(a) for a in u_axes)
    for idx in np.split(order, bounds):
        pts = T + shifts[idx[0]]
        if on_nodes and not _on_nodes(f, pts[:: max(1, len(pts) // 7)]):
            on_nodes = False
        F = (interp(pts) * inner_chirp).reshape(shape)
        for s0 in range(0, len(idx), max(1, chunk // max(shape))):
            sub = idx[s0:s0 + max(1, chunk // max(shape))]
            X = None
            for k in range(r):
                E = np.exp(-2j * np.pi * np.outer(freq[sub, k], u_axes[k]))
                X = E @ F.reshape(shape[0], -1) if k == 0 else np.einsum("oa...,oa->o...", X, E)
                if k == 0:
                    X = X.reshape((len(sub),) + shape[1:])
            vals[sub] = X * du
    vals *= plan.constants.mu_S * outer
    out = GridFunction(plan.output_spec, vals.reshape(plan.output_spec.shape))
    return (out, _info(plan, f, out, not on_nodes)) if return_info else out


def apply_chirp_fft(plan: TransformPlan, f: GridFunction, return_info: bool = False):
    """Per-slice FFT evaluation; exact on the derived output grid."""
    if not plan.axis_aligned:
        raise UnsupportedModeError("ker(B) is not axis aligned; use apply_quadrature")
    if f.spec != plan.input_spec:
        raise ValueError("input grid does not match the plan")
    S, lay, spec = plan.S, plan.layout, f.spec
    A, C, D = S.A, S.C, S.D
    d = S.d
    X = spec.points()

    if not lay.J:
        vals = _rescale_branch(plan, f, plan.output_spec.points())
        out = GridFunction(plan.output_spec, vals)
        return (out, _info(plan, f, out, False)) if return_info else out

    Ji, Ki = list(lay.J), list(lay.K)
    Bp = plan.frame.B_pinv
    # xi2 lives on the K axes with D[K,K]^T xi2_K = x_K
    xi2 = np.zeros_like(X)
    if Ki:
        xi2[..., Ki] = X[..., Ki] / lay.dK
    T = np.zeros_like(X)
    T[..., Ji] = X[..., Ji]
    BpA = Bp @ A
    phase = np.einsum("...i,ij,...j->...", T, BpA, T) + 2 * np.einsum("...i,ij,...j->...", xi2, C, T)
    g = f.values * np.exp(1j * np.pi * phase)

    eta_axes = {}
    for j in Ji:
        n, h, x0 = spec.n[j], spec.step[j], spec.min[j]
        deta = 1.0 / (n * h)
        eta0 = -(n // 2) * deta
        k = np.arange(n)
        shape = [1] * d
        shape[j] = n
        g = g * np.exp(-2j * np.pi * eta0 * k * h).reshape(shape)
        eta = eta0 + deta * k
        eta_axes[j] = eta
    g = np.fft.fftn(g, axes=Ji)
    for j in Ji:
        shape = [1] * d
        shape[j] = spec.n[j]
        g = g * (spec.step[j] * np.exp(-2j * np.pi * eta_axes[j] * spec.min[j])).reshape(shape)

    # output coordinates on the (eta_J, x_K) index layout
    Xi = np.zeros_like(X)
    for j, b in zip(Ji, lay.b):
        shape = [1] * d
        shape[j] = spec.n[j]
        Xi[..., j] = np.broadcast_to((b * eta_axes[j]).reshape(shape), spec.shape)
    xi1 = Xi.copy()
    if Ki:
        Xi[..., Ki] = xi2[..., Ki]
    outer = np.einsum("...i,ij,...j->...", xi1, D @ Bp, xi1) + np.einsum(
        "...i,ij,...j->...", xi2, D @ C.T, xi2)
    vals = plan.constants.mu_S * np.exp(1j * np.pi * outer) * g
    flip = [j for j, b in zip(Ji, lay.b) if b < 0] + [k for k, dk in zip(Ki, lay.dK) if dk < 0]
    if flip:
        vals = np.flip(vals, axis=flip)
    out = GridFunction(plan.output_spec, vals)
    return (out, _info(plan, f, out, False)) if return_info else out


def apply(plan: TransformPlan, f: GridFunction, return_info: bool = False):
    if plan.mode == "chirp_fft":
        return apply_chirp_fft(plan, f, return_info)
    return apply_quadrature(plan, f, return_info)


def phase_align(f: GridFunction, g: GridFunction) -> tuple:
    """(theta, residual) with theta = arg<f, g> and residual ||f - e^{i theta} g|| / ||f||."""
    if f.spec != g.spec:
        raise ValueError("grids differ")
    nf, ng = l2_norm(f), l2_norm(g)
    if nf == 0:
        raise AlignmentError("reference function is zero")
    ip = inner(f, g)
    if ng > 0 and abs(ip) <= 1e-14 * nf * ng:
        raise AlignmentError("functions are orthogonal; phase undefined")
    theta = float(np.angle(ip))
    res = np.sqrt(np.sum(np.abs(f.values - np.exp(1j * theta) * g.values) ** 2) * f.spec.cell) / nf
    return theta, float(res)


def transform_grid(S: SymplecticMatrix, f: GridFunction, mode: str | None = None,
                   output_spec: GridSpec | None = None, return_info: bool = False):
    """One-shot transform; ``mode=None`` takes the FFT path whenever it applies."""
    if mode is None:
        aligned = axis_layout(S) is not None
        mode = "chirp_fft" if aligned and output_spec is None else "quadrature"
    plan = make_plan(S, f.spec, mode, output_spec)
    return apply(plan, f, return_info)
