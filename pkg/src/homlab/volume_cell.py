"""Discrete volume cell problem with affine Dirichlet ring.

Nodes sit on a grid of spacing ``h`` covering the axis-aligned cube
``Q_t(center)``. Each grid cell carries the coefficient of the lattice cell
containing its lower corner and a forward-difference gradient taken from
that corner. The outer layer of nodes is pinned to ``xi . y``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .geometry import as_fraction
from .integrand import VolumeIntegrand


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual, result=None):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual
        self.result = result


@dataclass
class DiscreteVolumeProblem:
    integrand: VolumeIntegrand
    xi: np.ndarray
    center: tuple
    t: float
    h: float
    coef: np.ndarray
    pinned: np.ndarray
    u0: np.ndarray

    @property
    def dim(self) -> int:
        return self.coef.ndim

    @property
    def n_nodes(self) -> int:
        return self.pinned.shape[0]

    def affine_energy(self) -> float:
        return energy(self, self.u0)


@dataclass
class VolumeCellResult:
    value: float
    normalized: float
    iterations: int
    residual: float
    minimizer: np.ndarray
    energies: list = field(default_factory=list)


def _axis_floors(lower: Fraction, h: Fraction, count: int) -> np.ndarray:
    return np.array([math.floor(lower + h * k) for k in range(count)], dtype=np.int64)


def assemble_volume_problem(f: VolumeIntegrand, xi, center=None, t: float = 8, h: float = 1.0) -> DiscreteVolumeProblem:
    n = f.field.dim
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi.shape[1] != n:
        raise ValueError(f"xi must have {n} columns")
    center = (0,) * n if center is None else tuple(center)
    tf, hf = as_fraction(t), as_fraction(h)
    ratio = tf / hf
    if ratio.denominator != 1:
        raise ValueError(f"side t={t} is not an integer multiple of h={h}")
    cells_per_side = int(ratio)
    if cells_per_side < 2:
        raise ValueError("need t >= 2h")
    N = cells_per_side + 1
    lowers = [as_fraction(c) - tf / 2 for c in center]
    floors = [_axis_floors(lo, hf, cells_per_side) for lo in lowers]
    grid = np.stack(np.meshgrid(*floors, indexing="ij"), axis=-1)
    coef = f.field.values(grid)

    coords = [np.array([float(lo + hf * k) for k in range(N)]) for lo in lowers]
    mesh = np.stack(np.meshgrid(*coords, indexing="ij"), axis=0)
    u0 = np.tensordot(xi, mesh, axes=([1], [0]))

    pinned = np.zeros((N,) * n, dtype=bool)
    for i in range(n):
        idx = [slice(None)] * n
        idx[i] = 0
        pinned[tuple(idx)] = True
        idx[i] = N - 1
        pinned[tuple(idx)] = True
    return DiscreteVolumeProblem(f, xi, center, float(t), float(h), coef, pinned, u0)


def _cell_gradients(problem: DiscreteVolumeProblem, u: np.ndarray) -> list[np.ndarray]:
    n = problem.dim
    out = []
    for i in range(n):
        d = np.diff(u, axis=1 + i)
        sl = [slice(None)] + [slice(None, -1) if j != i else slice(None) for j in range(n)]
        out.append(d[tuple(sl)] / problem.h)
    return out


def energy(problem: DiscreteVolumeProblem, u: np.ndarray) -> float:
    grads = _cell_gradients(problem, u)
    sq = sum(np.sum(gr * gr, axis=0) for gr in grads)
    p = problem.integrand.p
    dens = sq if p == 2 else sq ** (p / 2)
    return float(np.sum(problem.coef * dens) * problem.h**problem.dim)


def energy_gradient(problem: DiscreteVolumeProblem, u: np.ndarray) -> np.ndarray:
    """Derivative of the discrete energy with respect to every node value."""
    n, h, p = problem.dim, problem.h, problem.integrand.p
    grads = _cell_gradients(problem, u)
    sq = sum(np.sum(gr * gr, axis=0) for gr in grads)
    if p == 2:
        factor = 2.0 * problem.coef
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = p * problem.coef * np.where(sq > 0, sq ** ((p - 2) / 2), 0.0)
    factor = factor * h**n / h
    out = np.zeros_like(u)
    for i, gr in enumerate(grads):
        w = factor * gr
        lo = [slice(None)] + [slice(None, -1)] * n
        hi = list(lo)
        hi[1 + i] = slice(1, None)
        out[tuple(lo)] -= w
        out[tuple(hi)] += w
    return out


def stiffness_matrix(problem: DiscreteVolumeProblem) -> sp.csr_array:
    """Matrix ``L`` with ``energy = sum_k u_k^T L u_k`` when ``p = 2``."""
    n, N = problem.dim, problem.n_nodes
    ids = np.arange(N**n).reshape((N,) * n)
    rows, cols, vals = [], [], []
    w = problem.coef.reshape(-1) * problem.h ** (n - 2)
    for i in range(n):
        lo = tuple(slice(None, -1) for _ in range(n))
        hi = tuple(slice(1, None) if j == i else slice(None, -1) for j in range(n))
        a = ids[lo].reshape(-1)
        b = ids[hi].reshape(-1)
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [w, w, -w, -w]
    L = sp.coo_array((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N**n, N**n))
    return L.tocsr()


def _solve_quadratic(problem, tol, max_iter):
    L = stiffness_matrix(problem)
    free = ~problem.pinned.reshape(-1)
    Lff = L[free][:, free]
    Lfp = L[free][:, ~free]
    diag = Lff.diagonal()
    precond = sp.diags_array(1.0 / diag)
    u = problem.u0.reshape(problem.u0.shape[0], -1).copy()
    total_iters, worst = 0, 0.0
    energies = [energy(problem, problem.u0)]
    for comp in range(u.shape[0]):
        up = u[comp, ~free]
        b = -(Lfp @ up)
        const = float(up @ (L[~free][:, ~free] @ up))
        iters = [0]
        history = []

        def callback(xk, history=history, iters=iters):
            iters[0] += 1
            history.append(float(xk @ (Lff @ xk) - 2 * xk @ b) + const)

        x, info = cg(Lff, b, x0=u[comp, free], rtol=tol, atol=0.0, maxiter=max_iter, M=precond, callback=callback)
        bnorm = float(np.linalg.norm(b))
        res = float(np.linalg.norm(b - Lff @ x))
        rel = res / bnorm if bnorm > 0 else res
        u[comp, free] = x
        total_iters += iters[0]
        worst = max(worst, rel)
        if len(energies) == 1 and u.shape[0] == 1:
            energies.extend(history)
        if info > 0:
            u_full = u.reshape(problem.u0.shape)
            partial = VolumeCellResult(energy(problem, u_full), 0.0, total_iters, worst, u_full, energies)
            raise ConvergenceError("conjugate gradient did not converge", rel, partial)
    return u.reshape(problem.u0.shape), total_iters, worst, energies


def _solve_descent(problem, tol, max_iter):
    free = ~problem.pinned
    u = problem.u0.copy()
    E = energy(problem, u)
    g = energy_gradient(problem, u)
    g[:, ~free] = 0.0
    d = -g
    energies = [E]
    alpha = problem.h / max(float(np.abs(g).max()), 1e-300)
    rel = 0.0
    for it in range(1, max_iter + 1):
        gnorm2 = float(np.sum(g * g))
        if gnorm2 == 0.0:
            return u, it - 1, 0.0, energies
        slope = float(np.sum(g * d))
        if slope >= 0:
            d, slope = -g, -gnorm2
        alpha *= 4.0
        while True:
            trial = u + alpha * d
            Et = energy(problem, trial)
            if Et <= E + 1e-4 * alpha * slope or alpha < 1e-300:
                break
            alpha *= 0.5
        if Et > E:
            return u, it, rel, energies
        g_new = energy_gradient(problem, trial)
        g_new[:, ~free] = 0.0
        beta = max(0.0, float(np.sum(g_new * (g_new - g))) / gnorm2)
        d = -g_new + beta * d
        rel = (E - Et) / max(abs(Et), 1e-300)
        u, E, g = trial, Et, g_new
        energies.append(E)
        if rel < tol:
            return u, it, rel, energies
    partial = VolumeCellResult(E, 0.0, max_iter, rel, u, energies)
    raise ConvergenceError("descent did not reach the energy tolerance", rel, partial)


def solve_volume_cell(problem: DiscreteVolumeProblem, tol: float = 1e-10, max_iter: int = 20_000) -> VolumeCellResult:
    """Minimize the discrete energy over the free nodes.

    Quadratic energies (``p = 2``) go through preconditioned conjugate
    gradients with relative residual ``tol``; other exponents use nonlinear
    conjugate directions with Armijo backtracking, stopping once the relative
    energy decrease of an iteration drops below ``tol``.
    """
    if problem.integrand.p == 2:
        u, iters, res, energies = _solve_quadratic(problem, tol, max_iter)
    else:
        u, iters, res, energies = _solve_descent(problem, tol, max_iter)
    value = energy(problem, u)
    return VolumeCellResult(value, value / problem.t**problem.dim, iters, res, u, energies)


def gradient_check(problem: DiscreteVolumeProblem, u=None, probe_count: int = 10, step: float = 1e-5,
                   rng_seed: int = 0) -> float:
    """Worst relative error between the analytic energy gradient and central
    differences at randomly probed free nodes (errors are relative to
    ``max(|analytic|, |numeric|, 1)``)."""
    rng = np.random.default_rng(rng_seed)
    u = problem.u0 if u is None else np.asarray(u, dtype=float)
    grad = energy_gradient(problem, u)
    free = np.argwhere(~problem.pinned)
    if len(free) == 0:
        return 0.0
    worst = 0.0
    for _ in range(probe_count):
        node = tuple(free[rng.integers(len(free))])
        comp = int(rng.integers(u.shape[0]))
        up, um = u.copy(), u.copy()
        up[(comp,) + node] += step
        um[(comp,) + node] -= step
        fd = (energy(problem, up) - energy(problem, um)) / (2 * step)
        an = grad[(comp,) + node]
        worst = max(worst, abs(an - fd) / max(abs(an), abs(fd), 1.0))
    return worst


def subcube_centers(center, t: float, dim: int, k: int = 2) -> list[tuple]:
    """Centers of the ``k^dim`` cubes of side ``t / k`` tiling ``Q_t(center)``."""
    side = as_fraction(t) / k
    offsets = [-as_fraction(t) / 2 + side * (j + Fraction(1, 2)) for j in range(k)]
    return [tuple(as_fraction(c) + o for c, o in zip(center, combo))
            for combo in itertools.product(offsets, repeat=dim)]
