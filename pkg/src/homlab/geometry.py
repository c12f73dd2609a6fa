"""Exact rational frames, oriented cubes, lifted intervals and jump data.

Rotations are kept as ``Fraction`` matrices; floating point only enters when
regions are rasterized, and even then membership of lattice half-points is
decided with integer arithmetic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

DEFAULT_M_CAP = 1000

_DIRECTION_RE = re.compile(r"^\s*\[([^\]]*)\]\s*(?:/\s*(\d+))?\s*$")


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(repr(float(x)))


def _lcm_all(values) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, int(v))
    return out


@dataclass(frozen=True)
class RationalDirection:
    """Unit vector ``numerators / denominator`` with exact unit length."""

    numerators: tuple
    denominator: int

    def __post_init__(self):
        nums = tuple(int(v) for v in self.numerators)
        den = int(self.denominator)
        if den <= 0:
            raise ValueError("denominator must be positive")
        if sum(v * v for v in nums) != den * den:
            raise ValueError(f"direction {list(nums)}/{den} is not a unit vector")
        g = math.gcd(den, *nums)
        object.__setattr__(self, "numerators", tuple(v // g for v in nums))
        object.__setattr__(self, "denominator", den // g)

    @classmethod
    def parse(cls, text: str) -> RationalDirection:
        """Read the config notation ``[a,b]/d`` (``/d`` optional for integers)."""
        m = _DIRECTION_RE.match(text)
        if not m:
            raise ValueError(f"cannot parse direction {text!r}; expected [a,b]/d")
        nums = [int(v) for v in m.group(1).split(",")]
        return cls(tuple(nums), int(m.group(2) or 1))

    @classmethod
    def from_vector(cls, v, max_denominator: int = DEFAULT_M_CAP, atol: float = 1e-12) -> RationalDirection:
        """Recognize a float unit vector that is exactly rational."""
        if isinstance(v, RationalDirection):
            return v
        v = np.asarray(v, dtype=float)
        for d in range(1, max_denominator + 1):
            nums = np.rint(v * d).astype(np.int64)
            if np.all(np.abs(nums / d - v) <= atol) and int(np.sum(nums * nums)) == d * d:
                return cls(tuple(int(x) for x in nums), d)
        raise ValueError(f"{v.tolist()} is not a rational unit vector with denominator <= {max_denominator}")

    @classmethod
    def axis(cls, i: int, dim: int = 2, sign: int = 1) -> RationalDirection:
        nums = [0] * dim
        nums[i] = sign
        return cls(tuple(nums), 1)

    @property
    def dim(self) -> int:
        return len(self.numerators)

    def fractions(self) -> list[Fraction]:
        return [Fraction(v, self.denominator) for v in self.numerators]

    def as_float(self) -> np.ndarray:
        return np.asarray(self.numerators, dtype=float) / self.denominator

    def __neg__(self) -> RationalDirection:
        return RationalDirection(tuple(-v for v in self.numerators), self.denominator)

    def __str__(self) -> str:
        return "[" + ",".join(str(v) for v in self.numerators) + f"]/{self.denominator}"


@dataclass(frozen=True)
class Frame:
    """Rational rotation ``R`` with ``R e_n = nu`` and minimal integer scale ``M``."""

    nu: RationalDirection
    R: tuple
    M: int

    @property
    def dim(self) -> int:
        return self.nu.dim

    def R_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.R])

    def MR(self) -> np.ndarray:
        """The integer matrix ``M R``."""
        return np.array([[int(x * self.M) for x in row] for row in self.R], dtype=np.int64)

    def lattice_shift(self, zp) -> tuple:
        """Integer vector ``M R (z', 0)``, orthogonal to ``nu``."""
        z = list(int(v) for v in zp) + [0]
        mr = self.MR()
        return tuple(int(v) for v in mr @ np.asarray(z, dtype=np.int64))


def _matmul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    return tuple(tuple(sum(A[i][r] * B[r][j] for r in range(k)) for j in range(m)) for i in range(n))


def _transpose(A):
    return tuple(tuple(A[j][i] for j in range(len(A))) for i in range(len(A[0])))


def make_frame(nu, m_cap: int = DEFAULT_M_CAP) -> Frame:
    """Frame built from the reflection swapping ``e_n`` and ``nu``, composed
    with a sign flip of the first axis so that ``det R = +1``."""
    if not isinstance(nu, RationalDirection):
        nu = RationalDirection.from_vector(nu, max_denominator=m_cap)
    n = nu.dim
    if n < 2:
        raise ValueError("frames need dimension >= 2")
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    v_nu = nu.fractions()
    if v_nu == [Fraction(int(i == n - 1)) for i in range(n)]:
        R = tuple(tuple(row) for row in eye)
    else:
        v = [Fraction(int(i == n - 1)) - v_nu[i] for i in range(n)]
        vv = sum(x * x for x in v)
        H = [[eye[i][j] - 2 * v[i] * v[j] / vv for j in range(n)] for i in range(n)]
        D = [row[:] for row in eye]
        D[0][0] = Fraction(-1)
        R = _matmul(H, D)
    M = _lcm_all(x.denominator for row in R for x in row)
    if M > m_cap:
        raise ValueError(f"integer scale M={M} exceeds cap {m_cap}")
    return Frame(nu=nu, R=R, M=M)


def is_orthogonal(frame: Frame) -> bool:
    n = frame.dim
    RtR = _matmul(_transpose(frame.R), frame.R)
    return all(RtR[i][j] == int(i == j) for i in range(n) for j in range(n))


def det_exact(R) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    A = [list(row) for row in R]
    n = len(A)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            A[r] = [A[r][k] - f * A[c][k] for k in range(n)]
    return det


@dataclass(frozen=True)
class AffineBox:
    """The set ``{y : lo < B (y - origin) < hi}`` with strictness per side.

    ``closed_lo`` turns the lower inequality into ``<=`` (half-open boxes).
    """

    B: tuple
    origin: tuple
    lo: tuple
    hi: tuple
    closed_lo: bool

    def _integer_form(self):
        n = len(self.origin)
        db = _lcm_all(x.denominator for row in self.B for x in row)
        do = _lcm_all(x.denominator for x in self.origin)
        L = _lcm_all(x.denominator for x in self.lo + self.hi)
        Bn = np.array([[int(x * db) for x in row] for row in self.B], dtype=object)
        On = [int(x * do) for x in self.origin]
        K = 2 * db * do
        lo = [int(x * K * L) for x in self.lo]
        hi = [int(x * K * L) for x in self.hi]
        return n, Bn, do, On, L, lo, hi

    def contains_half(self, Y2) -> np.ndarray:
        """Membership of the points ``Y2 / 2`` (``Y2`` integer, shape (..., n))."""
        Y2 = np.asarray(Y2, dtype=np.int64)
        n, Bn, do, On, L, lo, hi = self._integer_form()
        bound = (int(np.abs(Y2).max(initial=0)) * do + 2 * max((abs(v) for v in On), default=0))
        bound *= max(sum(abs(int(x)) for x in row) for row in Bn) * L
        if bound >= 2**62 or max(abs(v) for v in lo + hi) >= 2**62:
            raise OverflowError("region denominators too large for exact rasterization")
        Bn = Bn.astype(np.int64)
        shifted = Y2 * do - 2 * np.asarray(On, dtype=np.int64)
        vals = (shifted @ Bn.T) * L
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        lower = vals >= lo if self.closed_lo else vals > lo
        return np.all(lower & (vals < hi), axis=-1)

    def float_vertices(self) -> np.ndarray:
        Binv = np.linalg.inv(np.array([[float(x) for x in row] for row in self.B]))
        n = len(self.origin)
        corners = []
        for mask in range(2**n):
            s = np.array([float(self.hi[i] if mask >> i & 1 else self.lo[i]) for i in range(n)])
            corners.append(Binv @ s + np.array([float(x) for x in self.origin]))
        return np.array(corners)


@dataclass(frozen=True)
class OrientedCube:
    """Open cube ``R Q_side(0) + center``."""

    center: tuple
    side: Fraction
    frame: Frame

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(as_fraction(c) for c in self.center))
        object.__setattr__(self, "side", as_fraction(self.side))
        if self.side <= 0:
            raise ValueError("cube side must be positive")
        if len(self.center) != self.frame.dim:
            raise ValueError("center dimension does not match frame")

    @property
    def dim(self) -> int:
        return self.frame.dim

    def box(self) -> AffineBox:
        n = self.dim
        half = self.side / 2
        return AffineBox(
            B=_transpose(self.frame.R),
            origin=self.center,
            lo=(-half,) * n,
            hi=(half,) * n,
            closed_lo=False,
        )

    def contains(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        local = (y - np.array([float(c) for c in self.center])) @ self.frame.R_float()
        return np.all(np.abs(local) < float(self.side) / 2, axis=-1)


def axis_cube(center, side, dim: int = 2) -> OrientedCube:
    return OrientedCube(center=tuple(center), side=side, frame=make_frame(RationalDirection.axis(dim - 1, dim)))


@dataclass(frozen=True)
class Interval1:
    """Half-open interval ``[a, b)``."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", as_fraction(self.a))
        object.__setattr__(self, "b", as_fraction(self.b))
        if not self.b > self.a:
            raise ValueError("interval needs b > a")

    @property
    def length(self) -> Fraction:
        return self.b - self.a

    def __add__(self, z) -> Interval1:
        return Interval1(self.a + z, self.b + z)


@dataclass(frozen=True)
class Parallelepiped:
    """Half-open parallelepiped ``corner + sum_i s_i edges[i]``, ``s_i in [0, 1)``."""

    corner: tuple
    edges: tuple
    frame: Frame
    interval: Interval1

    def vertices(self) -> list:
        n = len(self.corner)
        out = []
        for mask in range(2**n):
            out.append(tuple(self.corner[k] + sum(self.edges[i][k] for i in range(n) if mask >> i & 1) for k in range(n)))
        return out

    def volume(self) -> Fraction:
        return abs(det_exact(_transpose(self.edges)))

    def box(self) -> AffineBox:
        """Preimage box under ``M R``: ``A' x [-c, c)`` in lifted coordinates."""
        Rt = _transpose(self.frame.R)
        M = self.frame.M
        B = tuple(tuple(x / M for x in row) for row in Rt)
        c = self.interval.length / 2
        return AffineBox(
            B=B,
            origin=(Fraction(0),) * self.frame.dim,
            lo=(self.interval.a, -c),
            hi=(self.interval.b, c),
            closed_lo=True,
        )


def lift_interval(interval: Interval1, frame: Frame) -> Parallelepiped:
    """``M R (A' x [-c, c))`` with ``c = |A'| / 2`` (planar case)."""
    if frame.dim != 2:
        raise ValueError("interval lifting is implemented for n = 2")
    M = frame.M
    c = interval.length / 2
    MR = [[x * M for x in row] for row in frame.R]

    def apply(v):
        return tuple(sum(MR[i][j] * v[j] for j in range(2)) for i in range(2))

    corner = apply((interval.a, -c))
    edges = (apply((interval.length, Fraction(0))), apply((Fraction(0), 2 * c)))
    return Parallelepiped(corner=corner, edges=edges, frame=frame, interval=interval)


@dataclass(frozen=True)
class JumpDatum:
    """Two-valued boundary datum: ``zeta`` where ``(y - x) . nu >= 0``, else 0."""

    x: tuple
    zeta: tuple
    nu: object

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(as_fraction(v) for v in self.x))
        zeta = tuple(float(v) for v in np.atleast_1d(self.zeta))
        if not any(zeta):
            raise ValueError("zeta must be nonzero")
        object.__setattr__(self, "zeta", zeta)
        if not isinstance(self.nu, RationalDirection):
            nu = np.asarray(self.nu, dtype=float)
            if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
                raise ValueError("nu must be a unit vector")
            object.__setattr__(self, "nu", tuple(nu.tolist()))

    @property
    def zeta_norm(self) -> float:
        return float(np.linalg.norm(self.zeta))

    def nu_float(self) -> np.ndarray:
        if isinstance(self.nu, RationalDirection):
            return self.nu.as_float()
        return np.asarray(self.nu)

    def upper_side_half(self, Y2) -> np.ndarray:
        """True where the point ``Y2 / 2`` carries the value ``zeta``."""
        Y2 = np.asarray(Y2, dtype=np.int64)
        if isinstance(self.nu, RationalDirection):
            do = _lcm_all(v.denominator for v in self.x)
            Xn = np.asarray([int(v * do) for v in self.x], dtype=np.int64)
            nums = np.asarray(self.nu.numerators, dtype=np.int64)
            return ((Y2 * do - 2 * Xn) @ nums) >= 0
        x = np.array([float(v) for v in self.x])
        return ((Y2 / 2.0 - x) @ self.nu_float()) >= 0


def jump_value(d: JumpDatum, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    x = np.array([float(v) for v in d.x])
    if isinstance(d.nu, RationalDirection):
        s = sum(Fraction(repr(float(yi))) * n for yi, n in zip(y, d.nu.numerators)) - sum(
            xi * n for xi, n in zip(d.x, d.nu.numerators)
        )
        upper = s >= 0
    else:
        upper = float((y - x) @ d.nu_float()) >= 0
    return np.asarray(d.zeta) if upper else np.zeros(len(d.zeta))
