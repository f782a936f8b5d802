"""Matrix-free linear operators on sequence vectors and circle grids.

The operators here are the concrete ones the rest of the package runs on:
weighted backward shifts (unilateral ``B_w`` and bilateral ``S_w``), the
Kalish operator on ``L^2(T)``, and adjoints of polynomial multipliers on the
coefficient space of ``H^2``.  Every operator is immutable and exposes
``apply`` plus an operator-norm bound when one is known.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import GridMismatch, TagMismatch, ValidationError, WindowExhausted
from .spaces import L2_FULL, L2_HALF, GridFunction, SeqVector, SpaceTag, Vector

__all__ = [
    "LinearOp",
    "FunctionOp",
    "WeightedShift",
    "KalishOperator",
    "AdjointMultiplier",
    "apply_shift",
    "apply_kalish",
    "apply_adjoint_multiplier",
    "apply_power",
    "backward_orbit",
    "forward_orbit",
    "orbit_vector",
    "reproducing_kernel",
    "operator_matrix",
]


class LinearOp:
    """Base class: a bounded linear map with an optional declared norm bound."""

    norm_bound: float | None = None

    def apply(self, v: Vector) -> Vector:
        raise NotImplementedError

    def __call__(self, v: Vector) -> Vector:
        return self.apply(v)

    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        bound = None
        if self.norm_bound is not None and other.norm_bound is not None:
            bound = self.norm_bound * other.norm_bound
        return FunctionOp(lambda v: self.apply(other.apply(v)), bound, f"({self!r} @ {other!r})")

    def __rmul__(self, a: complex) -> "LinearOp":
        from .spaces import scale

        bound = None if self.norm_bound is None else abs(a) * self.norm_bound
        return FunctionOp(lambda v: scale(a, self.apply(v)), bound, f"{a!r}*{self!r}")


class FunctionOp(LinearOp):
    """Wraps a callable that is known to be linear."""

    def __init__(self, fn: Callable[[Vector], Vector], norm_bound: float | None = None, name: str = "op"):
        self._fn = fn
        self.norm_bound = norm_bound
        self._name = name

    def apply(self, v: Vector) -> Vector:
        return self._fn(v)

    def __repr__(self) -> str:
        return self._name


def _nonzero_extent(v: SeqVector) -> tuple[int, int] | None:
    nz = np.flatnonzero(v.entries)
    if len(nz) == 0:
        return None
    return v.lo + int(nz[0]), v.lo + int(nz[-1]) + 1


def _exact_quotient(a: complex, w: complex) -> tuple[complex, bool]:
    """A double ``c`` with ``fl(w * c) == a`` when one exists near ``a / w``.

    Plain division is exact only up to one rounding, so the product can miss
    ``a`` by an ulp.  We search a few ulp neighbours of the quotient in each
    component and keep the first hit; multiplication is done by the same numpy
    ufunc that :meth:`WeightedShift.apply` uses.
    """
    w_arr = np.array([w], dtype=np.complex128)
    c0 = np.complex128(a) / w_arr[0]
    if (w_arr * np.array([c0]))[0] == a:
        return complex(c0), True
    steps = (0, 1, -1, 2, -2, 3, -3)

    def nudged(x: float, k: int) -> float:
        y = x
        target = math.inf if k > 0 else -math.inf
        for _ in range(abs(k)):
            y = math.nextafter(y, target)
        return y

    res = [nudged(c0.real, k) for k in steps]
    ims = [nudged(c0.imag, k) for k in steps] if c0.imag != 0 or np.complex128(a).imag != 0 else [c0.imag]
    cand = np.array([complex(r, i) for r in res for i in ims], dtype=np.complex128)
    hit = np.flatnonzero(w_arr * cand == a)
    if len(hit):
        return complex(cand[hit[0]]), True
    return complex(c0), False


class WeightedShift(LinearOp):
    """Weighted backward shift with weights materialized over a finite window.

    ``B_w e_n = w_n e_{n-1}`` with ``B_w e_0 = 0`` (unilateral, weights indexed
    from 1) or ``S_w f_n = w_n f_{n-1}`` for all integers (bilateral).  Asking
    for a weight outside the window raises :class:`WindowExhausted`.
    """

    def __init__(self, weights: ArrayLike, lo: int = 1, side: str = "unilateral"):
        if side not in ("unilateral", "bilateral"):
            raise ValidationError(f"unknown shift side {side!r}")
        w = np.array(weights, dtype=np.complex128).reshape(-1)
        if side == "unilateral" and lo < 1:
            raise ValidationError("unilateral weights are indexed from 1")
        if len(w) == 0:
            raise ValidationError("at least one weight is required")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if np.any(w == 0):
            raise ValidationError("weights must be non-zero")
        w.setflags(write=False)
        self.side = side
        self.lo = int(lo)
        self.weights = w
        self.norm_bound = float(np.max(np.abs(w)))
        self._coef = [1 + 0j]  # z_{-n} = coef[n] e_n
        self._exact = [True]

    @classmethod
    def unilateral(cls, weights: ArrayLike) -> "WeightedShift":
        """Weights ``w_1, w_2, ...`` given in order."""
        return cls(weights, lo=1, side="unilateral")

    @classmethod
    def bilateral(cls, weights: ArrayLike, lo: int) -> "WeightedShift":
        """Weights ``w_lo, w_{lo+1}, ...`` given in order."""
        return cls(weights, lo=lo, side="bilateral")

    @classmethod
    def from_function(cls, fn: Callable[[int], complex], lo: int, hi: int, side: str = "unilateral") -> "WeightedShift":
        """Materialize ``fn(n)`` for ``lo <= n < hi``."""
        return cls([fn(n) for n in range(lo, hi)], lo=lo, side=side)

    @classmethod
    def constant(cls, c: complex, size: int, side: str = "unilateral") -> "WeightedShift":
        if side == "unilateral":
            return cls(np.full(size, c), lo=1)
        return cls(np.full(2 * size + 1, c), lo=-size, side="bilateral")

    @property
    def hi(self) -> int:
        return self.lo + len(self.weights)

    @property
    def tag(self) -> SpaceTag:
        return L2_HALF if self.side == "unilateral" else L2_FULL

    def weight(self, n: int) -> complex:
        if not self.lo <= n < self.hi:
            raise WindowExhausted(f"weight w_{n} outside materialized window [{self.lo}, {self.hi})")
        return complex(self.weights[n - self.lo])

    def _check_side(self, v: SeqVector) -> None:
        want = "half" if self.side == "unilateral" else "full"
        if not isinstance(v, SeqVector) or v.tag.side != want:
            raise TagMismatch(f"{self.side} shift needs a {want}-line vector")

    def apply(self, v: SeqVector) -> SeqVector:
        self._check_side(v)
        ext = _nonzero_extent(v)
        if ext is None:
            return SeqVector.zeros(v.tag)
        a, b = ext
        if self.side == "unilateral":
            a = max(a, 1)
            if a >= b:
                return SeqVector.zeros(v.tag)
        if a < self.lo or b > self.hi:
            raise WindowExhausted(
                f"vector support [{a}, {b}) needs weights outside the window [{self.lo}, {self.hi})"
            )
        out = self.weights[a - self.lo : b - self.lo] * v.entries[a - v.lo : b - v.lo]
        return SeqVector(v.tag, a - 1, out)

    def product(self, n: int) -> complex:
        """``w_1 ... w_n``."""
        p = 1 + 0j
        for k in range(1, n + 1):
            p *= self.weight(k)
        return p

    def backward(self, n: int) -> SeqVector:
        """``z_{-n}``: the preimage chain of ``z_0 = e_0`` under this shift."""
        if n < 0:
            raise ValidationError("backward orbit index must be non-negative")
        while len(self._coef) <= n:
            k = len(self._coef)
            c, ok = _exact_quotient(self._coef[-1], self.weight(k))
            self._coef.append(c)
            self._exact.append(ok)
        return SeqVector(self.tag, n, [self._coef[n]])

    def backward_exact(self, n: int) -> bool:
        """Whether ``apply(z_{-n}) == z_{-(n-1)}`` holds bitwise for this chain step."""
        self.backward(n)
        return self._exact[n]

    def __repr__(self) -> str:
        return f"WeightedShift({self.side}, window=[{self.lo}, {self.hi}))"


class KalishOperator(LinearOp):
    """``Af(t) = e^{it} f(t) - int_0^t i e^{is} f(s) ds`` on a uniform grid.

    The integral is a left Riemann sum, so ``(Af)_0`` has an empty integral.
    """

    def __init__(self, M: int):
        if M < 16:
            raise ValidationError("the Kalish grid needs M >= 16")
        self.M = int(M)
        theta = GridFunction.angles(self.M)
        self._e = np.exp(1j * theta)
        # |e^{it} f| <= |f|, and the Volterra part has L^2 norm at most 2 pi
        self.norm_bound = 1.0 + 2 * np.pi

    def apply(self, f: GridFunction) -> GridFunction:
        if not isinstance(f, GridFunction):
            raise TagMismatch("the Kalish operator acts on grid functions")
        if f.M != self.M:
            raise GridMismatch(f"operator grid {self.M} vs function grid {f.M}")
        step = 1j * self._e * f.values * (2 * np.pi / self.M)
        integral = np.concatenate(([0j], np.cumsum(step)[:-1]))
        return GridFunction(self._e * f.values - integral)

    def __repr__(self) -> str:
        return f"KalishOperator(M={self.M})"


class AdjointMultiplier(LinearOp):
    """Adjoint of multiplication by ``phi(z) = sum_m a_m z^m`` on ``H^2``.

    Acts on Taylor coefficients truncated at degree ``N``:
    ``(Tc)_n = sum_m conj(a_m) c_{n+m}``.  Coefficients above ``N`` are
    dropped, so eigen-identities only hold on coordinates ``0 .. N-D``.
    """

    def __init__(self, symbol_coeffs: Sequence[complex], N: int):
        a = np.array(symbol_coeffs, dtype=np.complex128).reshape(-1)
        if len(a) == 0:
            raise ValidationError("symbol needs at least one coefficient")
        if N < len(a) - 1:
            raise ValidationError("truncation degree N must be at least the symbol degree")
        a.setflags(write=False)
        self.coeffs = a
        self.N = int(N)
        self.norm_bound = float(np.sum(np.abs(a)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def symbol(self, z: complex) -> complex:
        return complex(np.polyval(self.coeffs[::-1], z))

    def apply(self, c: SeqVector) -> SeqVector:
        if not isinstance(c, SeqVector) or c.tag.side != "half":
            raise TagMismatch("the adjoint multiplier acts on half-line coefficient vectors")
        ext = _nonzero_extent(c)
        if ext is not None and ext[1] - 1 > self.N:
            raise ValidationError(f"support reaches index {ext[1] - 1} > N = {self.N}")
        dense = c.window(0, self.N + 1)
        out = np.zeros(self.N + 1, dtype=np.complex128)
        for m, am in enumerate(self.coeffs):
            out[: self.N + 1 - m] += np.conj(am) * dense[m:]
        return SeqVector(c.tag, 0, out)

    def __repr__(self) -> str:
        return f"AdjointMultiplier(degree={self.degree}, N={self.N})"


def apply_shift(S: WeightedShift, v: SeqVector) -> SeqVector:
    return S.apply(v)


def apply_kalish(K: KalishOperator, f: GridFunction) -> GridFunction:
    return K.apply(f)


def apply_adjoint_multiplier(T: AdjointMultiplier, c: SeqVector) -> SeqVector:
    return T.apply(c)


def apply_power(A: LinearOp, v: Vector, n: int) -> Vector:
    """``A^n v`` by repeated application."""
    if n < 0:
        raise ValidationError("power must be non-negative")
    for _ in range(n):
        v = A.apply(v)
    return v


def backward_orbit(S: WeightedShift, n: int) -> SeqVector:
    """``z_{-n} = e_n / (w_1 ... w_n)`` with ``z_0 = e_0`` (``f_n``, ``f_0`` when bilateral).

    Successive coefficients are chained so that ``S z_{-n}`` reproduces
    ``z_{-(n-1)}`` bitwise whenever a double with that property exists.
    """
    return S.backward(n)


def forward_orbit(S: WeightedShift, n: int) -> SeqVector:
    """``z_n = S^n z_0`` for ``n >= 0``."""
    return apply_power(S, SeqVector.basis(0, S.tag), n)


def orbit_vector(S: WeightedShift, n: int) -> SeqVector:
    """``z_n`` for any integer ``n``: forward images or the backward chain."""
    return forward_orbit(S, n) if n >= 0 else backward_orbit(S, -n)


def reproducing_kernel(z: complex, N: int, tag: SpaceTag = L2_HALF) -> SeqVector:
    """Taylor coefficients ``conj(z)^n``, ``n = 0..N``, of the Szego kernel ``k_z``."""
    if abs(z) >= 1:
        raise ValidationError("reproducing kernels need |z| < 1")
    return SeqVector(tag, 0, np.conj(complex(z)) ** np.arange(N + 1))


def operator_matrix(A: LinearOp, tag: SpaceTag, lo: int, hi: int) -> tuple[int, NDArray[np.complex128]]:
    """Dense matrix of ``A`` on the coordinates ``lo .. hi-1``.

    Returns ``(out_lo, mat)`` where column ``j`` holds ``A e_{lo+j}`` as
    coordinates starting at ``out_lo``.
    """
    images = [A.apply(SeqVector.basis(n, tag)) for n in range(lo, hi)]
    nonempty = [im for im in images if len(im)]
    if not nonempty:
        return lo, np.zeros((0, hi - lo), dtype=np.complex128)
    out_lo = min(im.lo for im in nonempty)
    out_hi = max(im.hi for im in nonempty)
    mat = np.zeros((out_hi - out_lo, hi - lo), dtype=np.complex128)
    for j, im in enumerate(images):
        mat[:, j] = im.window(out_lo, out_hi)
    return out_lo, mat
