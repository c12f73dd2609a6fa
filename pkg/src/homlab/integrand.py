"""Volume and surface integrand families of coefficient-times-shape form."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .medium import CoefficientField

SURFACE_FAMILIES = ("perimeter", "amplitude")


@dataclass(frozen=True)
class VolumeIntegrand:
    """``f(x, xi) = a(floor(x)) * |xi|^p`` with Frobenius norm ``|xi|``."""

    field: CoefficientField
    p: float = 2.0
    c1: float | None = None
    c2: float | None = None
    family: str = "scaled_power"

    def __post_init__(self):
        if self.family != "scaled_power":
            raise ValueError(f"unknown volume family {self.family!r}")
        if not self.p > 1:
            raise ValueError("exponent p must exceed 1")
        lo, hi = self.field.value_range()
        if self.c1 is None:
            object.__setattr__(self, "c1", lo)
        if self.c2 is None:
            object.__setattr__(self, "c2", hi)

    def with_field(self, field: CoefficientField) -> VolumeIntegrand:
        return replace(self, field=field)

    def shape(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.sqrt(np.sum(xi * xi)) ** self.p

    def coefficient_ok(self) -> bool:
        lo, hi = self.field.value_range()
        return self.c1 <= lo and hi <= self.c2 and self.c1 > 0


@dataclass(frozen=True)
class SurfaceIntegrand:
    """Surface densities ``g = c(floor(x))`` (perimeter) or
    ``g = c(floor(x)) * (1 + min(|zeta|, z_cap))`` (amplitude)."""

    field: CoefficientField
    family: str = "perimeter"
    c3: float | None = None
    c4: float | None = None
    c5: float | None = None
    z_cap: float = 4.0

    def __post_init__(self):
        if self.family not in SURFACE_FAMILIES:
            raise ValueError(f"unknown surface family {self.family!r}")
        if self.z_cap <= 0:
            raise ValueError("z_cap must be positive")
        lo, hi = self.field.value_range()
        if self.c3 is None:
            object.__setattr__(self, "c3", 1.0 if self.family == "perimeter" else 1.0 + self.z_cap)
        if self.c4 is None:
            object.__setattr__(self, "c4", lo)
        if self.c5 is None:
            object.__setattr__(self, "c5", hi)

    def with_field(self, field: CoefficientField) -> SurfaceIntegrand:
        return replace(self, field=field)

    def amplitude(self, zeta_norm) -> np.ndarray:
        zeta_norm = np.asarray(zeta_norm, dtype=float)
        if self.family == "perimeter":
            return np.ones_like(zeta_norm)
        return 1.0 + np.minimum(zeta_norm, self.z_cap)

    def cell_weights(self, cells, zeta_norm: float) -> np.ndarray:
        """Density at the given integer cells for a jump of size ``zeta_norm``."""
        return self.field.values(cells) * self.amplitude(zeta_norm)

    def coefficient_ok(self) -> bool:
        lo, hi = self.field.value_range()
        return self.c4 <= lo and hi <= self.c5 and self.c4 > 0 and self.c3 >= 1


def eval_volume(f: VolumeIntegrand, x, xi) -> float:
    a = f.field.at_points(np.asarray(x, dtype=float)[None, :])[0]
    return float(a * f.shape(xi))


def eval_surface(g: SurfaceIntegrand, x, zeta, nu) -> float:
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    nu = np.asarray(nu, dtype=float)
    zn = float(np.linalg.norm(zeta))
    if zn == 0.0:
        raise ValueError("jump amplitude zeta must be nonzero")
    if abs(float(np.linalg.norm(nu)) - 1.0) > 1e-12:
        raise ValueError("normal nu must be a unit vector")
    c = g.field.at_points(np.asarray(x, dtype=float)[None, :])[0]
    return float(c * g.amplitude(zn))


def _sample_points(rng, n_samples, dim, box=64.0):
    return rng.uniform(-box, box, size=(n_samples, dim))


def _sample_zetas(rng, n_samples, m):
    direction = rng.normal(size=(n_samples, m))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), size=(n_samples, 1)))
    return direction * radius


def validate_surface_axioms(g: SurfaceIntegrand, n_samples: int = 10_000, rng_seed: int = 0, m: int = 1) -> dict:
    """Worst sampled violation margin per class condition (<= 0 is satisfied).

    Conditions (g1) and (g2) have no finite test and are not reported.
    """
    rng = np.random.default_rng(rng_seed)
    dim = g.field.dim
    x = _sample_points(rng, n_samples, dim)
    z1 = _sample_zetas(rng, n_samples, m)
    z2 = _sample_zetas(rng, n_samples, m)
    nu = rng.normal(size=(n_samples, dim))
    nu /= np.linalg.norm(nu, axis=1, keepdims=True)
    c = g.field.at_points(x)
    n1 = np.linalg.norm(z1, axis=1)
    n2 = np.linalg.norm(z2, axis=1)
    # order each pair so that |zeta_small| <= |zeta_big|
    small = np.minimum(n1, n2)
    big = np.maximum(n1, n2)
    g_small = c * g.amplitude(small)
    g_big = c * g.amplitude(big)
    g3 = np.max(g_small - g.c3 * g_big)
    # pairs with c3 |zeta1| <= |zeta2|: stretch the big one if needed
    big4 = np.maximum(big, g.c3 * small)
    g4 = np.max(c * g.amplitude(small) - c * g.amplitude(big4))
    g1 = c * g.amplitude(n1)
    g5 = np.max(g.c4 - g1)
    g6 = np.max(g1 - g.c5 * (1.0 + n1))
    g_flip = np.array([eval_surface(g, xi, -zi, -ni) for xi, zi, ni in zip(x[:200], z1[:200], nu[:200])])
    g_orig = np.array([eval_surface(g, xi, zi, ni) for xi, zi, ni in zip(x[:200], z1[:200], nu[:200])])
    g7 = np.max(np.abs(g_flip - g_orig))
    return {"g3": float(g3), "g4": float(g4), "g5": float(g5), "g6": float(g6), "g7": float(g7)}


def validate_volume_axioms(f: VolumeIntegrand, n_samples: int = 10_000, rng_seed: int = 0, m: int = 1) -> dict:
    """Worst sampled margins of the lower (f3) and upper (f4) bounds."""
    rng = np.random.default_rng(rng_seed)
    dim = f.field.dim
    x = _sample_points(rng, n_samples, dim)
    xi = rng.normal(size=(n_samples, m * dim)) * np.exp(rng.uniform(-5, 3, size=(n_samples, 1)))
    norm_p = np.linalg.norm(xi, axis=1) ** f.p
    vals = f.field.at_points(x) * norm_p
    return {
        "f3": float(np.max(f.c1 * norm_p - vals)),
        "f4": float(np.max(vals - f.c2 * (1.0 + norm_p))),
    }
