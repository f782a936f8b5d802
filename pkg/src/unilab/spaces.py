"""Finitely supported sequence vectors and circle-grid functions.

Sequence vectors live in one of the ambient spaces ``l_p(N)``, ``l_p(Z)`` or
``c_0`` (half line or full line).  They are stored as a dense window of
complex coordinates ``entries[i]`` at index ``lo + i``; everything outside the
window is zero.  Grid functions are samples of an ``L^2(T)`` function at the
left endpoints ``theta_j = 2 pi j / M``.

All values are immutable: the coordinate arrays are marked read-only at
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import GridMismatch, TagMismatch, ValidationError

__all__ = [
    "SpaceTag",
    "SeqVector",
    "GridFunction",
    "Functional",
    "L2_HALF",
    "L2_FULL",
    "norm",
    "tail_norm",
    "dual_pair",
    "inner_product",
    "axpy",
    "scale",
    "sub",
    "add",
    "exactly_equal",
    "max_abs_diff",
    "coordinate_functional",
]

Side = Literal["half", "full"]


@dataclass(frozen=True)
class SpaceTag:
    """Identifies the ambient space of a :class:`SeqVector`.

    Parameters
    ----------
    side : {"half", "full"}
        Indices in ``N`` (half line) or ``Z`` (full line).
    kind : {"lp", "c0"}
        Norm family.
    p : float
        Exponent of the ``l_p`` norm; ignored for ``c0``.
    """

    side: Side = "half"
    kind: Literal["lp", "c0"] = "lp"
    p: float = 2.0

    def __post_init__(self):
        if self.side not in ("half", "full"):
            raise ValidationError(f"unknown side {self.side!r}")
        if self.kind not in ("lp", "c0"):
            raise ValidationError(f"unknown norm kind {self.kind!r}")
        if self.kind == "lp" and not (self.p >= 1.0 and np.isfinite(self.p)):
            raise ValidationError(f"l_p exponent must be a finite p >= 1, got {self.p}")
        if self.kind == "c0":
            # p carries no meaning for c0; normalise so equal spaces compare equal
            object.__setattr__(self, "p", float("inf"))

    @classmethod
    def lp(cls, p: float = 2.0, side: Side = "half") -> "SpaceTag":
        return cls(side=side, kind="lp", p=float(p))

    @classmethod
    def c0(cls, side: Side = "half") -> "SpaceTag":
        return cls(side=side, kind="c0")

    @property
    def is_c0(self) -> bool:
        return self.kind == "c0"

    def to_json(self) -> dict:
        out = {"side": self.side, "kind": self.kind}
        if self.kind == "lp":
            out["p"] = self.p
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SpaceTag":
        return cls(side=data["side"], kind=data["kind"], p=float(data.get("p", 2.0)))


L2_HALF = SpaceTag.lp(2.0, "half")
L2_FULL = SpaceTag.lp(2.0, "full")


def _frozen_complex(values: ArrayLike) -> NDArray[np.complex128]:
    arr = np.array(values, dtype=np.complex128).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("vector entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SeqVector:
    """A finitely supported vector ``sum_i entries[i] e_{lo+i}``."""

    tag: SpaceTag
    lo: int
    entries: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_complex(self.entries))
        object.__setattr__(self, "lo", int(self.lo))
        if self.tag.side == "half" and self.lo < 0:
            raise ValidationError("half-line vectors need lo >= 0")

    @classmethod
    def zeros(cls, tag: SpaceTag = L2_HALF) -> "SeqVector":
        return cls(tag, 0, np.zeros(0))

    @classmethod
    def basis(cls, n: int, tag: SpaceTag = L2_HALF) -> "SeqVector":
        return cls(tag, n, np.ones(1))

    @classmethod
    def from_dict(cls, coords: dict[int, complex], tag: SpaceTag = L2_HALF) -> "SeqVector":
        if not coords:
            return cls.zeros(tag)
        lo, hi = min(coords), max(coords) + 1
        entries = np.zeros(hi - lo, dtype=np.complex128)
        for n, c in coords.items():
            entries[n - lo] = c
        return cls(tag, lo, entries)

    @property
    def hi(self) -> int:
        """One past the last stored index."""
        return self.lo + len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, n: int) -> complex:
        if self.lo <= n < self.hi:
            return complex(self.entries[n - self.lo])
        return 0j

    def window(self, lo: int, hi: int) -> NDArray[np.complex128]:
        """Dense coordinates for indices ``lo .. hi-1`` (zeros outside support)."""
        out = np.zeros(max(hi - lo, 0), dtype=np.complex128)
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a < b:
            out[a - lo : b - lo] = self.entries[a - self.lo : b - self.lo]
        return out

    def support(self) -> list[int]:
        """Indices carrying a non-zero coordinate."""
        return [self.lo + int(i) for i in np.flatnonzero(self.entries)]

    def trimmed(self) -> "SeqVector":
        """The same vector with leading and trailing zeros removed from the window."""
        nz = np.flatnonzero(self.entries)
        if len(nz) == 0:
            return SeqVector.zeros(self.tag)
        return SeqVector(self.tag, self.lo + int(nz[0]), self.entries[nz[0] : nz[-1] + 1])

    def with_tag(self, tag: SpaceTag) -> "SeqVector":
        if tag.side != self.tag.side:
            raise TagMismatch("cannot move a vector between half and full line")
        return SeqVector(tag, self.lo, self.entries)

    def __add__(self, other: "SeqVector") -> "SeqVector":
        return add(self, other)

    def __sub__(self, other: "SeqVector") -> "SeqVector":
        return sub(self, other)

    def __neg__(self) -> "SeqVector":
        return scale(-1.0, self)

    def __mul__(self, a: complex) -> "SeqVector":
        return scale(a, self)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {
            "tag": self.tag.to_json(),
            "lo": self.lo,
            "entries": [[float(c.real), float(c.imag)] for c in self.entries],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SeqVector":
        entries = [complex(re, im) for re, im in data["entries"]]
        return cls(SpaceTag.from_json(data["tag"]), int(data["lo"]), entries)

    def __repr__(self) -> str:
        return f"SeqVector(tag={self.tag}, lo={self.lo}, len={len(self)})"


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples ``values[j] = f(exp(2 pi i j / M))`` of a function on the circle."""

    values: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_complex(self.values))
        if len(self.values) < 2:
            raise ValidationError("a grid needs M >= 2 points")

    @property
    def M(self) -> int:
        return len(self.values)

    @staticmethod
    def angles(M: int) -> NDArray[np.float64]:
        return 2 * np.pi * np.arange(M) / M

    @classmethod
    def from_callable(cls, fn, M: int) -> "GridFunction":
        """Sample ``fn(theta)`` on the left-endpoint grid of size ``M``."""
        return cls(fn(cls.angles(M)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return add(self, other)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return sub(self, other)

    def __mul__(self, a: complex) -> "GridFunction":
        return scale(a, self)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {"M": self.M, "values": [[float(c.real), float(c.imag)] for c in self.values]}

    def __repr__(self) -> str:
        return f"GridFunction(M={self.M})"


Vector = Union[SeqVector, GridFunction]
# A functional on sequences is stored as its coefficient sequence, one on a
# grid as its sample values; pairing rules live in dual_pair / inner_product.
Functional = Vector


def coordinate_functional(*indices: int, tag: SpaceTag = L2_HALF) -> SeqVector:
    """The functional ``sum_i e_{indices[i]}^*``."""
    coords: dict[int, complex] = {}
    for n in indices:
        coords[n] = coords.get(n, 0) + 1.0
    return SeqVector.from_dict(coords, tag)


def _check_grid(u: GridFunction, v: GridFunction) -> None:
    if u.M != v.M:
        raise GridMismatch(f"grid sizes differ: {u.M} vs {v.M}")


def _union(x: SeqVector, y: SeqVector) -> tuple[int, int]:
    if len(x) == 0 and len(y) == 0:
        return 0, 0
    if len(x) == 0:
        return y.lo, y.hi
    if len(y) == 0:
        return x.lo, x.hi
    return min(x.lo, y.lo), max(x.hi, y.hi)


def _combine(a: complex, x: Vector, b: complex, y: Vector) -> Vector:
    if isinstance(x, GridFunction) and isinstance(y, GridFunction):
        _check_grid(x, y)
        return GridFunction(a * x.values + b * y.values)
    if isinstance(x, SeqVector) and isinstance(y, SeqVector):
        if x.tag != y.tag:
            raise TagMismatch(f"{x.tag} vs {y.tag}")
        lo, hi = _union(x, y)
        if lo == hi:
            return SeqVector.zeros(x.tag)
        return SeqVector(x.tag, lo, a * x.window(lo, hi) + b * y.window(lo, hi))
    raise TagMismatch("cannot combine a sequence vector with a grid function")


def axpy(a: complex, x: Vector, y: Vector) -> Vector:
    """``a*x + y`` over the union window."""
    if isinstance(x, SeqVector) and isinstance(y, SeqVector):
        if x.tag != y.tag:
            raise TagMismatch(f"{x.tag} vs {y.tag}")
        lo, hi = _union(x, y)
        if lo == hi:
            return SeqVector.zeros(x.tag)
        return SeqVector(x.tag, lo, a * x.window(lo, hi) + y.window(lo, hi))
    if isinstance(x, GridFunction) and isinstance(y, GridFunction):
        _check_grid(x, y)
        return GridFunction(a * x.values + y.values)
    raise TagMismatch("cannot combine a sequence vector with a grid function")


def add(x: Vector, y: Vector) -> Vector:
    return axpy(1.0, x, y)


def sub(x: Vector, y: Vector) -> Vector:
    return _combine(1.0, x, -1.0, y)


def scale(a: complex, x: Vector) -> Vector:
    if isinstance(x, GridFunction):
        return GridFunction(a * x.values)
    return SeqVector(x.tag, x.lo, a * x.entries)


def _lp(entries: NDArray, tag: SpaceTag) -> float:
    if len(entries) == 0:
        return 0.0
    if tag.is_c0:
        return float(np.max(np.abs(entries)))
    return float(np.linalg.norm(entries, ord=tag.p))


def norm(v: Vector) -> float:
    """``l_p`` or sup norm of a sequence; grid ``L^2`` norm of a grid function."""
    if isinstance(v, GridFunction):
        return float(np.sqrt(np.mean(np.abs(v.values) ** 2)))
    return _lp(v.entries, v.tag)


def tail_norm(v: SeqVector, k: int) -> float:
    """Norm of ``v`` restricted to the indices ``|n| >= k``."""
    idx = np.arange(v.lo, v.hi)
    return _lp(v.entries[np.abs(idx) >= k], v.tag)


def dual_pair(f: Functional, v: Vector) -> complex:
    """Bilinear pairing: ``sum_k f_k v_k`` or ``(1/M) sum_j f_j v_j``.

    For sequences only the line (half or full) has to match, since the
    functional naturally lives in the dual space with a different exponent.
    """
    if isinstance(f, GridFunction) and isinstance(v, GridFunction):
        _check_grid(f, v)
        return complex(np.mean(f.values * v.values))
    if isinstance(f, SeqVector) and isinstance(v, SeqVector):
        if f.tag.side != v.tag.side:
            raise TagMismatch("functional and vector live on different lines")
        lo, hi = max(f.lo, v.lo), min(f.hi, v.hi)
        if lo >= hi:
            return 0j
        return complex(np.dot(f.window(lo, hi), v.window(lo, hi)))
    raise TagMismatch("cannot pair a sequence functional with a grid function")


def inner_product(u: Vector, v: Vector) -> complex:
    """Hilbert inner product, linear in ``u`` and conjugate-linear in ``v``."""
    if isinstance(u, GridFunction) and isinstance(v, GridFunction):
        _check_grid(u, v)
        return complex(np.mean(u.values * np.conj(v.values)))
    if isinstance(u, SeqVector) and isinstance(v, SeqVector):
        if u.tag.side != v.tag.side:
            raise TagMismatch("vectors live on different lines")
        lo, hi = max(u.lo, v.lo), min(u.hi, v.hi)
        if lo >= hi:
            return 0j
        return complex(np.vdot(v.window(lo, hi), u.window(lo, hi)))
    raise TagMismatch("cannot pair a sequence with a grid function")


def exactly_equal(x: SeqVector, y: SeqVector) -> bool:
    """Bitwise coordinate equality over the union window (tags must agree)."""
    if x.tag != y.tag:
        return False
    lo, hi = _union(x, y)
    return bool(np.array_equal(x.window(lo, hi), y.window(lo, hi)))


def max_abs_diff(x: Vector, y: Vector) -> float:
    d = sub(x, y)
    arr = d.values if isinstance(d, GridFunction) else d.entries
    return float(np.max(np.abs(arr))) if len(arr) else 0.0
