"""Unimodular eigenvectorfields sampled on the roots of unity.

An eigenvectorfield ``E`` of ``A`` satisfies ``A E(lambda) = lambda E(lambda)``
for ``|lambda| = 1``.  Here ``E`` is sampled at ``lambda_j = exp(2 pi i j / M)``
and its vector-valued Fourier coefficients

    E^(n) = int_T lambda^{-n} E(lambda) dlambda

are approximated by the DFT average ``(1/M) sum_j lambda_j^{-n} E(lambda_j)``.
Fields with known coefficients (closed-form trigonometric polynomials, or
piecewise-constant indicator fields that can be integrated exactly cell by
cell) also carry an ``analytic`` coefficient map.

Built-in fields: ``alpha B`` on ``l_2(N)``, ``alpha B^2`` with two comb
fields glued by a smooth bump, the Kalish operator's indicator field and its
renormalisation ``(1 - lambda) E(lambda)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import AliasingError, TagMismatch, ValidationError
from .operators import KalishOperator, LinearOp, WeightedShift
from .spaces import L2_HALF, GridFunction, SeqVector, SpaceTag, Vector, dual_pair, inner_product, norm, sub

__all__ = [
    "EigenField",
    "FourierTable",
    "TrigPolyCheck",
    "field_example1",
    "field_example3",
    "field_kalish",
    "smooth_bump",
    "eigen_residual",
    "fourier_coeff",
    "synthesize",
    "pairing_values",
    "trig_poly_pairing",
    "kalish_y",
    "kalish_closed_form_z",
    "kalish_exact_pairing",
    "constant_field",
]


def roots_of_unity(M: int) -> NDArray[np.complex128]:
    return np.exp(2j * np.pi * np.arange(M) / M)


@dataclass(frozen=True, eq=False)
class EigenField:
    """Samples ``E(lambda_j)`` of an eigenvectorfield of ``operator``."""

    samples: tuple[Vector, ...]
    operator: LinearOp | None
    name: str = "field"
    analytic: Callable[[int], Vector] | None = field(default=None, repr=False)
    parts: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.samples) < 4:
            raise ValidationError("a field needs M >= 4 samples")
        first = self.samples[0]
        for s in self.samples:
            if type(s) is not type(first):
                raise TagMismatch("all samples must be of one kind")
            if isinstance(s, SeqVector) and s.tag != first.tag:
                raise TagMismatch("all samples must share one space tag")
            if isinstance(s, GridFunction) and s.M != first.M:
                raise TagMismatch("all samples must share one grid")

    @property
    def M(self) -> int:
        return len(self.samples)

    @property
    def lambdas(self) -> NDArray[np.complex128]:
        return roots_of_unity(self.M)

    def scaled(self, c: Sequence[complex]) -> "EigenField":
        """The field ``c(lambda_j) E(lambda_j)`` for a scalar grid function ``c``."""
        from .spaces import scale

        return EigenField(tuple(scale(cj, s) for cj, s in zip(c, self.samples)), self.operator, f"c*{self.name}")


@dataclass(frozen=True, eq=False)
class FourierTable:
    N: int
    coeffs: dict[int, Vector]
    absSum: float
    decayFit: tuple[float, float] | None
    mode: str = "grid"

    def norms(self) -> dict[int, float]:
        return {n: norm(v) for n, v in self.coeffs.items()}

    def to_csv(self, cap: int = 8) -> str:
        """Rows ``n, re_0, im_0, ..., re_{cap-1}, im_{cap-1}, norm``.

        Sequence coefficients list coordinates ``lo .. lo+cap-1`` of a common
        window; grid coefficients list the first ``cap`` grid values.
        """
        vecs = list(self.coeffs.values())
        if isinstance(vecs[0], SeqVector):
            lo = min((v.lo for v in vecs if len(v)), default=0)
            rows_of = lambda v: v.window(lo, lo + cap)
        else:
            rows_of = lambda v: v.values[:cap]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["n"]
        for k in range(cap):
            head += [f"re_{k}", f"im_{k}"]
        w.writerow(head + ["norm"])
        for n in sorted(self.coeffs):
            v = self.coeffs[n]
            row = [n]
            for c in rows_of(v):
                row += [repr(float(c.real)), repr(float(c.imag))]
            w.writerow(row + [repr(norm(v))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "mode": self.mode,
            "absSum": self.absSum,
            "decayFit": None if self.decayFit is None else {"a": self.decayFit[0], "c": self.decayFit[1]},
            "norms": {str(n): v for n, v in sorted(self.norms().items())},
        }


@dataclass(frozen=True)
class TrigPolyCheck:
    pairingCoeffs: dict[int, complex]
    supportSet: tuple[int, ...]
    residualOffSupport: float

    def to_json(self) -> dict:
        return {
            "pairingCoeffs": {str(n): [c.real, c.imag] for n, c in sorted(self.pairingCoeffs.items())},
            "supportSet": list(self.supportSet),
            "residualOffSupport": self.residualOffSupport,
        }


# ---------------------------------------------------------------------------
# fields


def constant_field(v: Vector, M: int, operator: LinearOp | None = None) -> EigenField:
    """``E(lambda) = v`` for every ``lambda``; only an eigenfield in degenerate cases."""
    return EigenField(tuple(v for _ in range(M)), operator, "constant", analytic=lambda n: v if n == 0 else sub(v, v))


def field_example1(alpha: complex, trunc_k: int, M: int, tag: SpaceTag = L2_HALF) -> EigenField:
    """``E(lambda) = sum_{n=0}^{K} (lambda/alpha)^{n-1} e_n`` for ``A = alpha B``.

    The ``n = 0`` term is ``(alpha/lambda) e_0``, which ``B`` annihilates; the
    truncation leaves a residual of norm ``|alpha|^{-(K-1)}``.
    """
    if not abs(alpha) > 1:
        raise ValidationError("need |alpha| > 1")
    if trunc_k < 1:
        raise ValidationError("truncation must keep at least e_0 and e_1")
    lam = roots_of_unity(M)
    n = np.arange(trunc_k + 1)
    samples = tuple(SeqVector(tag, 0, (l / alpha) ** (n - 1)) for l in lam)
    A = WeightedShift(np.full(trunc_k, alpha), lo=1)

    def coeff(k: int) -> SeqVector:
        # E(lambda) = sum_m alpha^{1-m} lambda^{m-1} e_m, so E^(k) = alpha^{-k} e_{k+1}
        if -1 <= k <= trunc_k - 1:
            return SeqVector(tag, k + 1, [complex(alpha) ** (-k)])
        return SeqVector.zeros(tag)

    return EigenField(samples, A, "example1", analytic=coeff)


def smooth_bump(theta: NDArray, arc: tuple[float, float]) -> NDArray[np.float64]:
    """C-infinity bump in ``[0, 1]`` supported on the closed arc ``[a, b]`` of angles.

    ``psi(s) = exp(1 - 1/(1 - s^2))`` for ``|s| < 1`` with ``s`` the affine
    image of the angle onto ``(-1, 1)``; the peak value 1 sits at the arc
    midpoint.
    """
    a, b = arc
    s = (2 * np.asarray(theta, dtype=float) - a - b) / (b - a)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1 - 1 / (1 - s[inside] ** 2))
    return out


def field_example3(
    alpha: complex,
    bump: tuple[float, float] | None,
    trunc_k: int,
    M: int,
    tag: SpaceTag = L2_HALF,
) -> EigenField:
    """Glued field ``phi E_1 + (1 - phi) E_2`` of ``A = alpha B^2``.

    ``E_1(lambda) = sum (lambda/alpha)^n e_{2n+1}`` and
    ``E_2(lambda) = sum (lambda/alpha)^n e_{2n}``, truncated at index
    ``trunc_k``.  ``bump`` is the angle arc ``(a, b)`` with
    ``0 <= a < b <= 2 pi`` carrying ``phi``; ``None`` means ``phi = 0``.
    The individual combs are available as ``field.parts["E1"]``, ``["E2"]``.
    """
    if not abs(alpha) > 1:
        raise ValidationError("need |alpha| > 1")
    if bump is not None:
        a, b = bump
        if not (0 <= a < b <= 2 * np.pi):
            raise ValidationError(f"invalid arc {bump!r}: need 0 <= a < b <= 2 pi")
    lam = roots_of_unity(M)
    theta = 2 * np.pi * np.arange(M) / M
    phi = np.zeros(M) if bump is None else smooth_bump(theta, bump)
    idx = np.arange(trunc_k + 1)

    def comb(l: complex, parity: int) -> NDArray:
        out = np.zeros(trunc_k + 1, dtype=np.complex128)
        sel = idx % 2 == parity
        out[sel] = (l / alpha) ** (idx[sel] // 2)
        return out

    e1 = [comb(l, 1) for l in lam]
    e2 = [comb(l, 0) for l in lam]
    samples = tuple(SeqVector(tag, 0, ph * x + (1 - ph) * y) for ph, x, y in zip(phi, e1, e2))
    B = WeightedShift(np.ones(trunc_k), lo=1)
    A = complex(alpha) * (B @ B)
    parts = {
        "E1": EigenField(tuple(SeqVector(tag, 0, x) for x in e1), A, "E1"),
        "E2": EigenField(tuple(SeqVector(tag, 0, y) for y in e2), A, "E2"),
        "phi": phi,
    }
    return EigenField(samples, A, "example3", parts=parts)


def _cell_integrals(n: int, M: int) -> NDArray[np.complex128]:
    """``int_{theta_m}^{theta_{m+1}} e^{-i n theta} dtheta / 2pi`` for each cell ``m``."""
    if n == 0:
        return np.full(M, 1.0 / M, dtype=np.complex128)
    edges = 2 * np.pi * np.arange(M + 1) / M
    e = np.exp(-1j * n * edges)
    return (e[1:] - e[:-1]) / (-2j * np.pi * n)


def _kalish_semi_analytic(n: int, M: int, renormalized: bool) -> GridFunction:
    """Fourier coefficient of the Kalish indicator field, integrated exactly per cell.

    For ``theta`` in cell ``m`` the sampled indicator ``E(e^{i theta})(t_j)``
    equals ``1[m < j]``, so the coefficient at ``t_j`` is the sum of the cell
    integrals over ``m < j``.
    """
    cells = _cell_integrals(n, M)
    if renormalized:
        cells = cells - _cell_integrals(n - 1, M)
    return GridFunction(np.concatenate(([0j], np.cumsum(cells)[:-1])))


def field_kalish(M: int, renormalized: bool = False) -> EigenField:
    """Indicator field ``E(lambda_m) = 1[j > m]`` of the Kalish operator.

    With ``renormalized`` the samples are ``F(lambda_m) = (1 - lambda_m) E(lambda_m)``.
    """
    if M < 16:
        raise ValidationError("Kalish fields need M >= 16")
    lam = roots_of_unity(M)
    j = np.arange(M)
    samples = []
    for m in range(M):
        e = (j > m).astype(np.complex128)
        samples.append(GridFunction((1 - lam[m]) * e if renormalized else e))
    return EigenField(
        tuple(samples),
        KalishOperator(M),
        "kalishF" if renormalized else "kalishE",
        analytic=lambda n: _kalish_semi_analytic(n, M, renormalized),
        parts={"renormalized": renormalized},
    )


def kalish_y(n: int, M: int) -> GridFunction:
    """``y_0(t) = t/2pi`` and ``y_n(t) = (1 - e^{-int})/(2 i pi n)`` on the grid."""
    t = GridFunction.angles(M)
    if n == 0:
        return GridFunction(t / (2 * np.pi))
    return GridFunction((1 - np.exp(-1j * n * t)) / (2j * np.pi * n))


def kalish_closed_form_z(n: int, M: int) -> GridFunction:
    """``z_n = y_n - y_{n-1}``, using the expanded closed form for ``n`` outside ``{0, 1}``."""
    if n in (0, 1):
        return kalish_y(n, M) - kalish_y(n - 1, M)
    t = GridFunction.angles(M)
    vals = (np.exp(-1j * (n - 1) * t) / (n - 1) - np.exp(-1j * n * t) / n - 1 / (n * (n - 1))) / (2j * np.pi)
    return GridFunction(vals)


def kalish_exact_pairing(M: int, k: int = 1, renormalized: bool = True, pairing: str = "inner") -> NDArray[np.complex128]:
    """Exact pairings of ``t -> e^{ikt}`` with the Kalish field at every ``lambda_m``.

    The field at ``lambda_m = e^{i theta_m}`` is the indicator of
    ``(theta_m, 2 pi)`` (times ``1 - lambda_m``); the pairing integral over
    ``t`` is done in closed form.  ``pairing="inner"`` conjugates the field.
    """
    theta = GridFunction.angles(M)
    lam = np.exp(1j * theta)
    if k == 0:
        base = (2 * np.pi - theta) / (2 * np.pi)
    else:
        base = (1 - np.exp(1j * k * theta)) / (2j * np.pi * k)
    factor = (1 - lam) if renormalized else np.ones(M)
    if pairing == "inner":
        factor = np.conj(factor)
    elif pairing != "dual":
        raise ValidationError(f"unknown pairing {pairing!r}")
    return factor * base


# ---------------------------------------------------------------------------
# analysis


def eigen_residual(field: EigenField) -> float:
    """``max_j ||A E(lambda_j) - lambda_j E(lambda_j)||``."""
    if field.operator is None:
        raise ValidationError("field has no operator attached")
    worst = 0.0
    for l, s in zip(field.lambdas, field.samples):
        try:
            r = field.operator.apply(s) - complex(l) * s
        except TagMismatch:
            raise
        worst = max(worst, norm(r))
    return worst


def _stack(samples: Sequence[Vector]) -> tuple[int, NDArray[np.complex128]]:
    if isinstance(samples[0], GridFunction):
        return 0, np.array([s.values for s in samples])
    nonempty = [s for s in samples if len(s)]
    lo = min((s.lo for s in nonempty), default=0)
    hi = max((s.hi for s in nonempty), default=0)
    return lo, np.array([s.window(lo, hi) for s in samples]).reshape(len(samples), hi - lo)


def _unstack(template: Vector, lo: int, row: NDArray) -> Vector:
    if isinstance(template, GridFunction):
        return GridFunction(row)
    return SeqVector(template.tag, lo, row)


def _decay_fit(norms: dict[int, float], rel_floor: float = 1e-13) -> tuple[float, float] | None:
    """Least squares ``log ||E^(n)|| = log c + |n| log a`` over ``|n| >= 2``."""
    top = max(norms.values(), default=0.0)
    pts = [(abs(n), v) for n, v in norms.items() if abs(n) >= 2 and v > rel_floor * top]
    if len({n for n, _ in pts}) < 2:
        return None
    x = np.array([n for n, _ in pts], dtype=float)
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    a = math.exp(slope)
    if not 0 < a <= 1 + 1e-12:
        return None
    return min(a, 1.0), math.exp(intercept)


def fourier_coeff(field: EigenField, N: int, mode: str = "grid") -> FourierTable:
    """Fourier table ``{n: E^(n)}`` for ``|n| <= N``.

    ``mode="grid"`` is the DFT average over the samples (requires ``2N < M``);
    ``mode="analytic"`` uses the field's exact coefficient map.
    """
    if mode == "grid":
        if not 2 * N < field.M:
            raise AliasingError(f"2N = {2 * N} must be below M = {field.M}")
        lo, X = _stack(field.samples)
        spec = np.fft.fft(X, axis=0) / field.M
        coeffs = {n: _unstack(field.samples[0], lo, spec[n % field.M]) for n in range(-N, N + 1)}
    elif mode == "analytic":
        if field.analytic is None:
            raise ValidationError(f"field {field.name!r} has no exact coefficient map")
        coeffs = {n: field.analytic(n) for n in range(-N, N + 1)}
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    norms = {n: norm(v) for n, v in coeffs.items()}
    abs_sum = float(math.fsum(norms[n] for n in sorted(norms)))
    return FourierTable(N, coeffs, abs_sum, _decay_fit(norms), mode)


def synthesize(table: FourierTable, M: int) -> list[Vector]:
    """``sum_n lambda_j^n E^(n)`` at the ``M`` roots of unity."""
    first = next(iter(table.coeffs.values()))
    keys = sorted(table.coeffs)
    lo, C = _stack([table.coeffs[n] for n in keys])
    lam = roots_of_unity(M)
    W = lam[:, None] ** np.array(keys)[None, :]
    return [_unstack(first, lo, row) for row in W @ C]


def pairing_values(field: EigenField, functional: Vector, pairing: str = "dual") -> NDArray[np.complex128]:
    """``<z*, E(lambda_j)>`` for every sample.

    ``pairing="dual"`` is the bilinear coordinate pairing; ``"inner"`` the
    Hilbert inner product ``<z*, E>`` conjugating the field.
    """
    if pairing == "dual":
        return np.array([dual_pair(functional, s) for s in field.samples])
    if pairing == "inner":
        return np.array([inner_product(functional, s) for s in field.samples])
    raise ValidationError(f"unknown pairing {pairing!r}")


def trig_poly_pairing(
    field: EigenField,
    functional: Vector,
    tol: float = 1e-9,
    degree: int | None = None,
    pairing: str = "dual",
    values: NDArray | None = None,
) -> TrigPolyCheck:
    """Scalar DFT of ``j -> <z*, E(lambda_j)>`` and its numerical support.

    ``values`` overrides the sampled pairings (e.g. with exact ones).
    """
    M = field.M
    degree = (M - 1) // 2 if degree is None else degree
    if not 2 * degree < M:
        raise AliasingError(f"2 * degree = {2 * degree} must be below M = {M}")
    p = pairing_values(field, functional, pairing) if values is None else np.asarray(values, dtype=np.complex128)
    spec = np.fft.fft(p) / M
    coeffs = {n: complex(spec[n % M]) for n in range(-degree, degree + 1)}
    support = tuple(n for n in sorted(coeffs) if abs(coeffs[n]) > tol)
    off = [abs(c) for n, c in coeffs.items() if n not in support]
    return TrigPolyCheck(coeffs, support, float(max(off, default=0.0)))
