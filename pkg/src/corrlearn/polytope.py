"""The weight search space (a box plus accumulated cuts) and its centers.

The search space starts as an axis-aligned box and shrinks by one halfspace
per correction.  Three centering strategies are provided: the center of the
maximum-volume inscribed ellipsoid (MVE), the analytic center of the
log-barrier, and the Chebyshev center (largest inscribed ball).  A
center-of-gravity strategy is deliberately not offered: although it enjoys
a dimension-independent contraction factor, computing it for an
inequality-described polytope costs far more than any of the centers here.

The MVE program

    max  log det B   s.t.  |B g_i|_2 + <d, g_i> <= c_i  for every row

is solved by a self-contained log-barrier Newton method over the symmetric
matrix B and center d, warm-started from the Chebyshev ball.  The barrier
subproblems are convex, so Newton with backtracking converges globally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog

from .kernel import Halfspace

__all__ = [
    "BoxBounds",
    "SearchSpace",
    "Ellipsoid",
    "EmptyInteriorError",
    "from_box",
    "add_cut",
    "contains",
    "mve_center",
    "analytic_center",
    "chebyshev_center",
    "estimate_volume",
    "prune_redundant",
]

_CONTAINS_TOL = 1e-12


class EmptyInteriorError(RuntimeError):
    """The polytope has empty interior: the accumulated cuts are inconsistent.

    Under valid directional corrections the true weight vector stays interior,
    so this signals a violated correction assumption (or contradictory input).
    """


@dataclass(frozen=True)
class BoxBounds:
    """Per-coordinate bounds lower_i <= theta_i <= upper_i."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ValueError("lower and upper must have the same length")
        if not np.all(lower < upper):
            raise ValueError("box bounds require lower < upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def radius_bound(self) -> float:
        """R, the largest bound magnitude over all coordinates."""
        return float(max(np.abs(self.lower).max(), np.abs(self.upper).max()))

    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds intersected with an ordered list of cut halfspaces."""

    box: BoxBounds
    cuts: tuple[Halfspace, ...] = ()

    @property
    def dim(self) -> int:
        return self.box.dim

    def rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Inequality form (G, c) with G theta <= c: 2r box rows then cuts."""
        r = self.dim
        G = np.vstack([np.eye(r), -np.eye(r)] + [cut.normal[None, :] for cut in self.cuts])
        c = np.concatenate(
            [self.box.upper, -self.box.lower, [-cut.offset for cut in self.cuts]]
        )
        return G, c

    def to_dict(self) -> dict:
        return {
            "lower": self.box.lower.tolist(),
            "upper": self.box.upper.tolist(),
            "cuts": [
                {"normal": cut.normal.tolist(), "offset": cut.offset}
                for cut in self.cuts
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        return cls(
            box=BoxBounds(lower=data["lower"], upper=data["upper"]),
            cuts=tuple(
                Halfspace(normal=c["normal"], offset=c["offset"]) for c in data["cuts"]
            ),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SearchSpace":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Ellipsoid:
    """The image {B v + d : |v| <= 1} of the unit ball, B symmetric PD."""

    shape: np.ndarray  # (r, r)
    center: np.ndarray  # (r,)

    def __post_init__(self):
        shape = np.asarray(self.shape, dtype=float)
        center = np.asarray(self.center, dtype=float).reshape(-1)
        if np.abs(shape - shape.T).max() > 1e-10:
            raise ValueError("ellipsoid shape matrix must be symmetric")
        shape = 0.5 * (shape + shape.T)
        if np.linalg.eigvalsh(shape)[0] <= 0:
            raise ValueError("ellipsoid shape matrix must be positive definite")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "center", center)

    def log_volume(self) -> float:
        return float(np.linalg.slogdet(self.shape)[1])


def from_box(bounds: BoxBounds) -> SearchSpace:
    return SearchSpace(box=bounds, cuts=())


def add_cut(space: SearchSpace, cut: Halfspace) -> SearchSpace:
    """Intersect with one more halfspace <h, theta> + b <= 0.

    The cut is rescaled to a unit normal before storage to keep the barrier
    solvers well conditioned; membership is unchanged.  Emptiness is
    detected later by the center solvers, not here.
    """
    if cut.normal.shape != (space.dim,):
        raise ValueError(
            f"cut normal must have shape ({space.dim},), got {cut.normal.shape}"
        )
    return SearchSpace(box=space.box, cuts=space.cuts + (cut.normalized(),))


def contains(space: SearchSpace, theta) -> bool:
    """Closed membership: every row satisfied within 1e-12."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (space.dim,):
        raise ValueError(f"theta must have shape ({space.dim},), got {theta.shape}")
    G, c = space.rows()
    return bool(np.all(G @ theta - c <= _CONTAINS_TOL))


def chebyshev_center(space: SearchSpace) -> tuple[np.ndarray, float]:
    """Center and radius of the largest inscribed Euclidean ball (an LP)."""
    G, c = space.rows()
    theta, radius = _chebyshev_rows(G, c)
    return theta, radius


def _chebyshev_rows(G: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, float]:
    n_rows, r = G.shape
    norms = np.linalg.norm(G, axis=1)
    obj = np.zeros(r + 1)
    obj[-1] = -1.0  # maximize the radius
    A_ub = np.hstack([G, norms[:, None]])
    res = linprog(
        obj,
        A_ub=A_ub,
        b_ub=c,
        bounds=[(None, None)] * r + [(0.0, None)],
        method="highs",
    )
    if not res.success:
        raise EmptyInteriorError(
            "Chebyshev LP infeasible: the accumulated cuts are inconsistent"
        )
    return res.x[:r], float(res.x[-1])


def analytic_center(space: SearchSpace, tol: float = 1e-8, max_newton: int = 200) -> np.ndarray:
    """Minimizer of -sum log(c_i - <g_i, theta>) over the polytope interior."""
    G, c = space.rows()
    theta, radius = _chebyshev_rows(G, c)
    if radius <= 1e-12:
        raise EmptyInteriorError(
            "polytope has empty interior: the accumulated cuts are inconsistent"
        )
    for _ in range(max_newton):
        s = c - G @ theta
        grad = G.T @ (1.0 / s)
        if np.linalg.norm(grad) <= tol:
            return theta
        W = G / s[:, None]
        H = W.T @ W
        try:
            step = -cho_solve(cho_factor(H), grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(H, grad, rcond=None)[0]
        alpha = 1.0
        f0 = -np.log(s).sum()
        slope = grad @ step
        while alpha > 1e-14:
            cand = theta + alpha * step
            s_new = c - G @ cand
            if np.all(s_new > 0) and -np.log(s_new).sum() <= f0 + 1e-4 * alpha * slope:
                break
            alpha *= 0.5
        theta = theta + alpha * step
    s = c - G @ theta
    grad = G.T @ (1.0 / s)
    if np.linalg.norm(grad) > tol:
        raise RuntimeError(
            f"analytic center Newton did not converge: |grad| = {np.linalg.norm(grad):.2e}"
        )
    return theta


# ---------------------------------------------------------------------------
# Maximum-volume inscribed ellipsoid via log-barrier Newton
# ---------------------------------------------------------------------------


def _sym_basis(r: int):
    """Orthonormal basis of symmetric r x r matrices, indexed by (i <= j)."""
    pairs = [(i, j) for i in range(r) for j in range(i, r)]
    I = np.array([p[0] for p in pairs])
    J = np.array([p[1] for p in pairs])
    sigma = np.where(I == J, 0.5, 1.0 / np.sqrt(2.0))
    return I, J, sigma


def _mat_to_coords(S, I, J, sigma):
    return 2.0 * sigma * S[I, J]


def _coords_to_mat(z, I, J, sigma, r):
    S = np.zeros((r, r))
    np.add.at(S, (I, J), sigma * z)
    np.add.at(S, (J, I), sigma * z)
    return S


class _BarrierState:
    """Feasibility and derivative assembly for the MVE barrier subproblem."""

    def __init__(self, G, c, fix_center=None):
        self.G = G
        self.c = c
        self.r = G.shape[1]
        self.I, self.J, self.sigma = _sym_basis(self.r)
        self.pB = self.I.shape[0]
        self.fix_center = fix_center
        nr = G.shape[0]
        # Sparse pattern of E_a g per row, as a dense (nr, r, pB) tensor.
        self._T = np.zeros((nr, self.r, self.pB))
        rows = np.arange(nr)[:, None]
        cols = np.arange(self.pB)[None, :]
        np.add.at(self._T, (rows, self.I[None, :], cols), self.sigma * G[:, self.J])
        np.add.at(self._T, (rows, self.J[None, :], cols), self.sigma * G[:, self.I])

    def slacks(self, B, d):
        W = self.G @ B
        nrm = np.linalg.norm(W, axis=1)
        s = self.c - self.G @ d - nrm
        return W, nrm, s

    def value(self, B, d, t):
        try:
            L = np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            return np.inf, None
        _, nrm, s = self.slacks(B, d)
        if np.any(s <= 0) or np.any(nrm <= 0):
            return np.inf, None
        logdet = 2.0 * np.log(np.diag(L)).sum()
        return -t * logdet - np.log(s).sum(), logdet

    def derivatives(self, B, d, t):
        I, J, sigma = self.I, self.J, self.sigma
        P = np.linalg.inv(B)
        P = 0.5 * (P + P.T)
        W, nrm, s = self.slacks(B, d)
        What = W / nrm[:, None]

        Q = sigma * (What[:, I] * self.G[:, J] + What[:, J] * self.G[:, I])
        grad_B = -t * _mat_to_coords(P, I, J, sigma) + (Q / s[:, None]).sum(axis=0)
        grad_d = (self.G / s[:, None]).sum(axis=0)

        H_f0 = 2.0 * np.outer(sigma, sigma) * (
            P[np.ix_(I, I)] * P[np.ix_(J, J)] + P[np.ix_(I, J)] * P[np.ix_(J, I)]
        )
        V = np.hstack([Q, self.G]) / s[:, None]
        H_outer = V.T @ V
        w_curv = 1.0 / (nrm * s)
        H_TT = np.einsum("mak,mal,m->kl", self._T, self._T, w_curv)
        H_QQ = (Q * w_curv[:, None]).T @ Q

        p = self.pB + self.r
        H = np.zeros((p, p))
        H[: self.pB, : self.pB] = t * H_f0 + H_TT - H_QQ
        H += H_outer
        grad = np.concatenate([grad_B, grad_d])
        if self.fix_center is not None:
            return grad[: self.pB], H[: self.pB, : self.pB]
        return grad, H


def _solve_mve(G, c, B0, d0, gap_tol=1e-8, inner_tol=1e-10, kkt_tol=1e-8,
               fix_center=False):
    """Barrier path following for the inscribed-ellipsoid program.

    Starts from a strictly feasible (B0, d0), multiplies the path parameter
    by 10 per outer step until the duality-gap proxy n_rows / t falls below
    gap_tol, solving each subproblem by damped Newton with an Armijo
    backtracking line search.  The final subproblem is additionally driven
    to a scaled stationarity below kkt_tol, which bounds the first-order
    KKT residual of the original program.
    """
    state = _BarrierState(G, c, fix_center=d0 if fix_center else None)
    r = G.shape[1]
    I, J, sigma = state.I, state.J, state.sigma
    B, d = B0.copy(), d0.copy()
    n_rows = G.shape[0]

    t = 1.0
    final_t = n_rows / gap_tol
    while True:
        last_stage = t >= final_t
        stalled = 0
        for _ in range(400 if last_stage else 200):
            grad, H = state.derivatives(B, d, t)
            step = _newton_step(H, grad)
            decrement_sq = float(-grad @ step)
            converged = decrement_sq / 2.0 <= inner_tol * max(1.0, t)
            if last_stage:
                converged = converged and np.abs(grad).max() <= kkt_tol * t
            if converged or stalled >= 3:
                break
            f0, _ = state.value(B, d, t)
            alpha = 1.0
            slope = float(grad @ step)
            while alpha > 1e-16:
                dB = _coords_to_mat(alpha * step[: state.pB], I, J, sigma, r)
                B_new = B + dB
                d_new = d if fix_center else d + alpha * step[state.pB :]
                f_new, _ = state.value(B_new, d_new, t)
                if f_new <= f0 + 1e-4 * alpha * slope:
                    break
                alpha *= 0.5
            else:
                break  # line search exhausted at numerical floor
            stalled = stalled + 1 if f_new >= f0 - abs(f0) * 1e-15 else 0
            B, d = B_new, d_new
        if last_stage:
            break
        t = min(t * 10.0, final_t)
    return 0.5 * (B + B.T), d, t


def _newton_step(H, grad):
    """Solve H step = -grad with Jacobi equilibration and refinement.

    The last barrier stages produce Hessians whose active-constraint rows
    dwarf the rest; symmetric diagonal scaling plus two iterative-
    refinement sweeps keeps the step accurate there.
    """
    scale = 1.0 / np.sqrt(np.maximum(np.diag(H), 1e-300))
    Hs = H * scale[:, None] * scale[None, :]
    gs = grad * scale
    try:
        factor = cho_factor(Hs)
        y = -cho_solve(factor, gs)
        for _ in range(2):
            resid = -gs - Hs @ y
            y += cho_solve(factor, resid)
    except np.linalg.LinAlgError:
        Hreg = Hs + 1e-12 * np.eye(Hs.shape[0])
        y = -np.linalg.solve(Hreg, gs)
    return y * scale


def mve_center(space: SearchSpace) -> Ellipsoid:
    """Maximum-volume inscribed ellipsoid of the search space.

    Raises EmptyInteriorError when the polytope is empty or lower
    dimensional (inconsistent corrections).  The returned center is
    strictly interior and satisfies the first-order KKT conditions of the
    inscribed-ellipsoid program to 1e-7 (measured on the Chebyshev-
    normalized polytope; the program is affinely equivariant and is solved
    in coordinates where the inscribed ball has unit radius, which keeps
    the barrier Hessians well scaled however small the polytope shrinks).
    """
    G, c = space.rows()
    d0, radius = _chebyshev_rows(G, c)
    if radius <= 1e-12:
        raise EmptyInteriorError(
            "polytope has empty interior: the accumulated cuts are inconsistent"
        )
    # Normalize: theta = d0 + radius * theta'; rows keep unit normals.
    c_scaled = (c - G @ d0) / radius
    B0 = 0.9 * np.eye(space.dim)
    B, d, t = _solve_mve(G, c_scaled, B0, np.zeros(space.dim))
    return Ellipsoid(shape=radius * B, center=d0 + radius * d)


def mve_kkt_residual(space: SearchSpace, ell: Ellipsoid) -> float:
    """First-order KKT stationarity residual of the normalized MVE program.

    Measures, with nonnegative least-squares multipliers, how far the
    objective gradient is from the cone of active-constraint gradients,
    relative to the gradient scale; zero at an exact optimizer.
    """
    from scipy.optimize import nnls

    G, c = space.rows()
    d0, radius = _chebyshev_rows(G, c)
    c_scaled = (c - G @ d0) / radius
    B = ell.shape / radius
    d = (ell.center - d0) / radius
    r = G.shape[1]
    I, J, sigma = _sym_basis(r)
    P = np.linalg.inv(B)
    P = 0.5 * (P + P.T)
    W = G @ B
    What = W / np.linalg.norm(W, axis=1)[:, None]
    Q = sigma * (What[:, I] * G[:, J] + What[:, J] * G[:, I])
    grad_f0 = np.concatenate([-_mat_to_coords(P, I, J, sigma), np.zeros(r)])
    constr_grads = np.hstack([Q, G]).T
    lam, _ = nnls(constr_grads, -grad_f0)
    resid = np.abs(constr_grads @ lam + grad_f0).max()
    return float(resid / max(1.0, np.abs(grad_f0).max()))


def _mve_shape_at_center(space: SearchSpace, center) -> Ellipsoid:
    """Largest inscribed ellipsoid with a pinned center (test instrument)."""
    G, c = space.rows()
    center = np.asarray(center, dtype=float).reshape(-1)
    s = c - G @ center
    norms = np.linalg.norm(G, axis=1)
    if np.any(s <= 0):
        raise EmptyInteriorError("pinned center is not strictly interior")
    B0 = 0.9 * (s / norms).min() * np.eye(space.dim)
    B, _, _ = _solve_mve(G, c, B0, center, fix_center=True)
    return Ellipsoid(shape=B, center=center)


def estimate_volume(space: SearchSpace, samples: int, seed=0) -> tuple[float, float]:
    """Rejection-sampling volume estimate from the box envelope.

    Returns (estimate, standard error); the standard error follows the
    binomial variance of the acceptance fraction.  Deterministic for a
    fixed seed.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    box = space.box
    pts = rng.uniform(box.lower, box.upper, size=(samples, box.dim))
    accepted = np.ones(samples, dtype=bool)
    for cut in space.cuts:
        accepted &= pts @ cut.normal + cut.offset <= _CONTAINS_TOL
    frac = accepted.mean()
    box_volume = box.volume()
    estimate = box_volume * frac
    std_error = box_volume * np.sqrt(frac * (1.0 - frac) / samples)
    return float(estimate), float(std_error)


def prune_redundant(space: SearchSpace, tol: float = 1e-9) -> SearchSpace:
    """Drop cut rows implied by the box and the remaining cuts.

    A cut (g, c_j) is redundant iff maximizing <g, theta> subject to the
    other rows stays below c_j; dropping such rows leaves membership
    unchanged.  Box rows are always kept so the sampling envelope and the
    radius bound survive.
    """
    r = space.dim
    box_G = np.vstack([np.eye(r), -np.eye(r)])
    box_c = np.concatenate([space.box.upper, -space.box.lower])
    kept: list[Halfspace] = list(space.cuts)
    idx = 0
    while idx < len(kept):
        others = kept[:idx] + kept[idx + 1 :]
        G = np.vstack([box_G] + [h.normal[None, :] for h in others])
        c = np.concatenate([box_c, [-h.offset for h in others]])
        target = kept[idx]
        res = linprog(
            -target.normal,
            A_ub=G,
            b_ub=c,
            bounds=[(None, None)] * r,
            method="highs",
        )
        if res.status == 2:
            raise EmptyInteriorError("polytope empty while pruning")
        if res.success and -res.fun <= -target.offset + tol:
            kept.pop(idx)
        else:
            idx += 1
    return SearchSpace(box=space.box, cuts=tuple(kept))
