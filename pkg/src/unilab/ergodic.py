"""Model ergodic systems, step observables and the factor map into a sequence space.

Systems
-------
``DoublingMap``
    ``Tx = 2x mod 1`` on exact bit lists: a state is a row of binary digits
    ``d_1 d_2 ...`` and ``T`` drops the leading digit, so iterates never lose
    precision.  Not invertible.
``Rotation``
    ``x -> x + angle mod 1`` in double precision.
``BernoulliShift``
    The bilateral fair-coin shift.  A state is ``(seed, offset)``; its
    coordinate ``i`` is a hash bit of ``(seed, offset + i)``, so the sequence
    is infinite, deterministic and ``T^n`` just moves the offset.

States are always batches (leading axis = sample index).

The factor map sends ``x`` to ``Phi_f(x) = sum_k f(T^k x) z_{-k}`` (truncated
at ``|k| <= K``), or ``sum_{k=1}^K f(T^k x) z_{-k+r}`` for non-invertible
systems, where ``(z_n)`` is an orbit of the operator.  It intertwines ``T``
with the operator up to a single truncation term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Union

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from .errors import BitBudgetExhausted, BudgetExceeded, NonInvertibleError, ValidationError, WindowExhausted
from .operators import LinearOp, WeightedShift, backward_orbit, forward_orbit, operator_matrix
from .spaces import SeqVector, SpaceTag, norm

__all__ = [
    "DoublingMap",
    "Rotation",
    "BernoulliShift",
    "BernoulliStates",
    "StepFunction",
    "FactorMapConfig",
    "PushforwardSample",
    "IntertwiningReport",
    "CorrelationReport",
    "DecayCertificate",
    "iterate",
    "sample_mu",
    "evaluate",
    "phi_f",
    "phi_batch",
    "intertwining_residual",
    "pushforward",
    "correlation",
    "decay_bound",
    "decay_certificate",
    "visit_lower_density",
    "to_float",
]

GOLDEN_CONJUGATE = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DoublingMap:
    bits: int = 64
    guard: int = 0
    invertible: ClassVar[bool] = False


@dataclass(frozen=True)
class Rotation:
    # double-precision stand-in for an irrational angle
    angle: float = GOLDEN_CONJUGATE
    invertible: ClassVar[bool] = True


@dataclass(frozen=True)
class BernoulliShift:
    invertible: ClassVar[bool] = True


System = Union[DoublingMap, Rotation, BernoulliShift]

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z: NDArray[np.uint64]) -> NDArray[np.uint64]:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True, eq=False)
class BernoulliStates:
    """A batch of points of ``{0,1}^Z``, coordinate ``i`` hashed from ``(seed, offset + i)``."""

    seeds: NDArray[np.uint64]
    offsets: NDArray[np.int64]

    def __post_init__(self):
        s = np.asarray(self.seeds, dtype=np.uint64).reshape(-1)
        o = np.broadcast_to(np.asarray(self.offsets, dtype=np.int64), s.shape).copy()
        s = s.copy()
        s.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "seeds", s)
        object.__setattr__(self, "offsets", o)

    def __len__(self) -> int:
        return len(self.seeds)

    def bits(self, lo: int, hi: int) -> NDArray[np.uint8]:
        """Coordinates ``lo .. hi-1`` of every state, shape ``(count, hi - lo)``."""
        idx = (self.offsets[:, None] + np.arange(lo, hi, dtype=np.int64)[None, :]).view(np.uint64)
        with np.errstate(over="ignore"):
            h = _mix64(self.seeds[:, None] ^ _mix64(idx + _GAMMA))
        return (h >> np.uint64(63)).astype(np.uint8)

    def shifted(self, n: int) -> "BernoulliStates":
        return BernoulliStates(self.seeds, self.offsets + np.int64(n))

    def take(self, sel) -> "BernoulliStates":
        return BernoulliStates(self.seeds[sel], self.offsets[sel])


def iterate(sys: System, x, n: int):
    """``T^n x`` for a batch of states."""
    if isinstance(sys, DoublingMap):
        if n < 0:
            raise NonInvertibleError("the doubling map has no inverse")
        remaining = x.shape[-1] - n
        if remaining < sys.guard or remaining < 0:
            raise BitBudgetExhausted(f"{x.shape[-1]} bits cannot support {n} doublings with guard {sys.guard}")
        return x[..., n:]
    if isinstance(sys, Rotation):
        return np.mod(x + n * sys.angle, 1.0)
    if isinstance(sys, BernoulliShift):
        return x.shifted(n)
    raise ValidationError(f"unknown system {sys!r}")


def sample_mu(sys: System, count: int, seed: int):
    """``count`` i.i.d. samples of the invariant measure, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    if isinstance(sys, DoublingMap):
        return rng.integers(0, 2, size=(count, sys.bits), dtype=np.uint8)
    if isinstance(sys, Rotation):
        return rng.random(count)
    if isinstance(sys, BernoulliShift):
        seeds = rng.integers(0, 2**64, size=count, dtype=np.uint64)
        return BernoulliStates(seeds, np.zeros(count, dtype=np.int64))
    raise ValidationError(f"unknown system {sys!r}")


def to_float(bits: NDArray[np.uint8]) -> NDArray[np.float64]:
    """``sum_i d_i 2^{-i}`` over the first 53 digits (exact in double precision)."""
    b = bits[..., :53].astype(np.float64)
    return b @ np.ldexp(1.0, -np.arange(1, b.shape[-1] + 1))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """A function of finitely many coordinates, given by its value table.

    For the doubling map and the rotation ``table[i]`` is the value on the
    dyadic cell ``[i 2^-B, (i+1) 2^-B)`` (digits ``d_1 .. d_B`` read as a
    binary number).  For the Bernoulli shift the table is indexed by the
    coordinates ``x_{-B} .. x_B``, ``x_{-B}`` being the most significant bit.
    """

    depth: int
    table: NDArray[np.complex128] = field(repr=False)
    bilateral: bool = False

    def __post_init__(self):
        t = np.array(self.table, dtype=np.complex128).reshape(-1)
        size = 2 ** (2 * self.depth + 1) if self.bilateral else 2**self.depth
        if len(t) != size:
            raise ValidationError(f"depth {self.depth} needs a table of {size} values, got {len(t)}")
        if not np.all(np.isfinite(t)):
            raise ValidationError("table values must be finite")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_table(cls, table, bilateral: bool = False) -> "StepFunction":
        size = len(table)
        if bilateral:
            depth = (int(round(math.log2(size))) - 1) // 2
        else:
            depth = int(round(math.log2(size)))
        return cls(depth, table, bilateral)

    @classmethod
    def constant(cls, c: complex, bilateral: bool = False) -> "StepFunction":
        return cls(0, [c] * (2 if bilateral else 1), bilateral)

    @classmethod
    def first_digit(cls) -> "StepFunction":
        """``f(x) = d_1(x)``, the indicator of ``[1/2, 1)``."""
        return cls(1, [0.0, 1.0])

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.table)))

    @property
    def mean(self) -> complex:
        return complex(np.mean(self.table))

    @property
    def l2(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.table) ** 2)))

    def __add__(self, other: "StepFunction") -> "StepFunction":
        a, b = _common_depth(self, other)
        return StepFunction(a.depth, a.table + b.table, a.bilateral)

    def __mul__(self, c: complex) -> "StepFunction":
        return StepFunction(self.depth, c * self.table, self.bilateral)

    __rmul__ = __mul__

    def refined(self, depth: int) -> "StepFunction":
        """The same function tabulated on a finer partition."""
        if depth < self.depth:
            raise ValidationError("cannot coarsen a step function")
        if self.bilateral:
            # coordinates x_{-D}..x_D; the old table reads the middle 2B+1
            D, B = depth, self.depth
            idx = np.arange(2 ** (2 * D + 1))
            inner = (idx >> (D - B)) & ((1 << (2 * B + 1)) - 1)
            return StepFunction(D, self.table[inner], True)
        return StepFunction(depth, np.repeat(self.table, 2 ** (depth - self.depth)))


def _common_depth(f: StepFunction, g: StepFunction) -> tuple[StepFunction, StepFunction]:
    if f.bilateral != g.bilateral:
        raise ValidationError("cannot combine unilateral and bilateral step functions")
    d = max(f.depth, g.depth)
    return f.refined(d), g.refined(d)


Observable = Union[StepFunction, Callable[[NDArray[np.float64]], NDArray]]


def _cell_index(bits: NDArray[np.uint8], width: int) -> NDArray[np.int64]:
    if width == 0:
        return np.zeros(bits.shape[0], dtype=np.int64)
    weights = np.left_shift(np.int64(1), np.arange(width - 1, -1, -1, dtype=np.int64))
    return bits[:, :width].astype(np.int64) @ weights


def evaluate(sys: System, f: Observable, x) -> NDArray[np.complex128]:
    """``f(x)`` for every state of the batch."""
    if hasattr(f, "evaluate_states"):
        # symbolic observables (e.g. the refined step functions of rokhlin)
        return f.evaluate_states(sys, x)
    if not isinstance(f, StepFunction):
        if isinstance(sys, DoublingMap):
            return np.asarray(f(to_float(x)), dtype=np.complex128)
        if isinstance(sys, Rotation):
            return np.asarray(f(x), dtype=np.complex128)
        raise ValidationError("callable observables need a system with real states")
    if isinstance(sys, DoublingMap):
        if f.bilateral:
            raise ValidationError("bilateral step function on the doubling map")
        if x.shape[-1] < f.depth:
            raise BitBudgetExhausted(f"state has {x.shape[-1]} bits, observable reads {f.depth}")
        return f.table[_cell_index(x, f.depth)]
    if isinstance(sys, Rotation):
        idx = np.minimum(np.floor(x * 2.0**f.depth).astype(np.int64), 2**f.depth - 1)
        return f.table[idx]
    if isinstance(sys, BernoulliShift):
        if not f.bilateral:
            raise ValidationError("the Bernoulli shift needs a bilateral step function")
        return f.table[_cell_index(x.bits(-f.depth, f.depth + 1), 2 * f.depth + 1)]
    raise ValidationError(f"unknown system {sys!r}")


# ---------------------------------------------------------------------------
# factor map


@dataclass(frozen=True, eq=False)
class FactorMapConfig:
    """Operator, orbit data and truncation of the factor map.

    ``orbit[m]`` is ``z_m`` (``m <= 0`` backward, ``m > 0`` forward images).
    The non-invertible form uses ``z_{-k+r}`` for ``k = 1..K``; the invertible
    form uses ``z_{-k}`` for ``|k| <= K``.  When ``r > 0`` every missing
    ``z_m`` with ``m >= r`` is zero because ``A^r z_0 = 0``.
    """

    operator: LinearOp
    orbit: dict[int, SeqVector]
    K: int
    r: int = 0
    invertible_form: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        if 0 not in self.orbit:
            raise ValidationError("orbit must contain z_0")

    @classmethod
    def from_shift(cls, S: WeightedShift, K: int, r: int = 0, invertible_form: bool = False) -> "FactorMapConfig":
        orbit = {-n: backward_orbit(S, n) for n in range(K + 2)}
        for n in range(1, K + 2):
            orbit[n] = forward_orbit(S, n)
        return cls(S, orbit, K, r, invertible_form)

    @property
    def tag(self) -> SpaceTag:
        return self.orbit[0].tag

    def z(self, m: int) -> SeqVector:
        if m in self.orbit:
            return self.orbit[m]
        if self.r > 0 and m >= self.r:
            return SeqVector.zeros(self.tag)
        raise WindowExhausted(f"orbit vector z_{m} was not supplied")

    def terms(self) -> list[tuple[int, int]]:
        """Pairs ``(k, m)``: the factor map adds ``f(T^k x) z_m``."""
        if self.invertible_form:
            return [(k, -k) for k in range(-self.K, self.K + 1)]
        return [(k, -k + self.r) for k in range(1, self.K + 1)]

    def tail_vectors(self) -> tuple[SeqVector, SeqVector]:
        """The two orbit vectors whose norms bound the intertwining defect."""
        if self.invertible_form:
            return self.z(-self.K), self.z(self.K + 1)
        z = self.z(-self.K + self.r)
        return z, self.operator.apply(z)

    def consistency(self) -> float:
        """``max ||A z_m - z_{m+1}||`` over the stored orbit."""
        worst = 0.0
        for m in sorted(self.orbit):
            if m + 1 in self.orbit:
                worst = max(worst, norm(self.operator.apply(self.orbit[m]) - self.orbit[m + 1]))
        return worst

    def to_json(self) -> dict:
        return {"K": self.K, "r": self.r, "invertibleForm": self.invertible_form, "orbitIndices": sorted(self.orbit)}


def _dense_orbit(cfg: FactorMapConfig) -> tuple[int, int, dict[int, NDArray]]:
    vecs = {m: cfg.z(m) for _, m in cfg.terms()}
    nonempty = [v for v in vecs.values() if len(v)]
    lo = min((v.lo for v in nonempty), default=0)
    hi = max((v.hi for v in nonempty), default=lo)
    return lo, hi, {m: v.window(lo, hi) for m, v in vecs.items()}


def phi_batch(sys: System, f: Observable, cfg: FactorMapConfig, x) -> tuple[int, NDArray[np.complex128]]:
    """``Phi_f`` at every state of a batch: ``(lo, rows)`` with coordinates from ``lo``."""
    if cfg.invertible_form and not sys.invertible:
        raise NonInvertibleError("the invertible form needs an invertible system")
    lo, hi, Z = _dense_orbit(cfg)
    count = len(x)
    out = np.zeros((count, hi - lo), dtype=np.complex128)
    for k, m in cfg.terms():
        out += evaluate(sys, f, iterate(sys, x, k))[:, None] * Z[m][None, :]
    return lo, out


def phi_f(sys: System, x, f: Observable, cfg: FactorMapConfig) -> SeqVector:
    """``Phi_f(x)`` for a single state (a batch of one)."""
    lo, rows = phi_batch(sys, f, cfg, x)
    if rows.shape[0] != 1:
        raise ValidationError("phi_f takes a single state; use phi_batch for batches")
    return SeqVector(cfg.tag, lo, rows[0])


@dataclass(frozen=True)
class IntertwiningReport:
    max_residual: float
    bound: float
    exact_tail: float
    count: int

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.bound

    def to_json(self) -> dict:
        return {
            "maxResidual": self.max_residual,
            "bound": self.bound,
            "exactTail": self.exact_tail,
            "count": self.count,
            "passed": self.passed,
        }


def _row_norms(rows: NDArray, tag: SpaceTag) -> NDArray[np.float64]:
    if rows.shape[1] == 0:
        return np.zeros(rows.shape[0])
    if tag.is_c0:
        return np.max(np.abs(rows), axis=1)
    return np.linalg.norm(rows, ord=tag.p, axis=1)


def _apply_rows(A: LinearOp, tag: SpaceTag, lo: int, rows: NDArray) -> tuple[int, NDArray]:
    out_lo, mat = operator_matrix(A, tag, lo, lo + rows.shape[1])
    return out_lo, rows @ mat.T


def _align(lo_a: int, a: NDArray, lo_b: int, b: NDArray) -> NDArray:
    lo = min(lo_a, lo_b)
    hi = max(lo_a + a.shape[1], lo_b + b.shape[1])
    out = np.zeros((a.shape[0], hi - lo), dtype=np.complex128)
    out[:, lo_a - lo : lo_a - lo + a.shape[1]] += a
    out[:, lo_b - lo : lo_b - lo + b.shape[1]] -= b
    return out


def intertwining_residual(
    f: Observable, cfg: FactorMapConfig, sys: System, count: int = 1000, seed: int = 0, x=None
) -> IntertwiningReport:
    """``max ||Phi_f(Tx) - A Phi_f(x)||`` over sampled states.

    The bound reported is ``||f||_inf (||z_{-K+r}|| + ||A z_{-K+r}||)`` for the
    non-invertible form and ``||f||_inf (||z_{-K}|| + ||z_{K+1}||)`` for the
    invertible one.  ``exact_tail`` is the norm of the single surviving term.
    """
    if x is None:
        x = sample_mu(sys, count, seed)
    lo1, at_tx = phi_batch(sys, f, cfg, iterate(sys, x, 1))
    lo0, at_x = phi_batch(sys, f, cfg, x)
    lo_a, a_phi = _apply_rows(cfg.operator, cfg.tag, lo0, at_x)
    res = _row_norms(_align(lo1, at_tx, lo_a, a_phi), cfg.tag)
    sup = f.sup if isinstance(f, StepFunction) else float(np.max(np.abs(evaluate(sys, f, x))))
    t1, t2 = cfg.tail_vectors()
    bound = sup * (norm(t1) + norm(t2))
    exact_tail = sup * (norm(t1) + (norm(t2) if cfg.invertible_form else 0.0))
    return IntertwiningReport(float(np.max(res)), float(bound), float(exact_tail), len(res))


@dataclass(frozen=True, eq=False)
class PushforwardSample:
    """Images ``Phi_f(x_i)`` of ``count`` sampled states (rows from coordinate ``lo``)."""

    lo: int
    tag: SpaceTag
    points: NDArray[np.complex128] = field(repr=False)
    seed: int
    count: int

    def vector(self, i: int) -> SeqVector:
        return SeqVector(self.tag, self.lo, self.points[i])

    def norms(self) -> NDArray[np.float64]:
        return _row_norms(self.points, self.tag)

    def coordinate_pairing(self, x: SeqVector) -> NDArray[np.complex128]:
        """``<x, z_i>`` (conjugating the sample points) for every point."""
        w = x.window(self.lo, self.lo + self.points.shape[1])
        return np.conj(self.points) @ w

    def ball_mass(self, center: SeqVector, radius: float, confidence: float = 0.95) -> tuple[float, tuple[float, float]]:
        """Fraction of points in the open ball, with a Wilson interval."""
        hi = self.lo + self.points.shape[1]
        lo2 = min(self.lo, center.lo) if len(center) else self.lo
        hi2 = max(hi, center.hi) if len(center) else hi
        pts = np.zeros((self.count, hi2 - lo2), dtype=np.complex128)
        pts[:, self.lo - lo2 : hi - lo2] = self.points
        d = _row_norms(pts - center.window(lo2, hi2)[None, :], self.tag)
        k = int(np.sum(d < radius))
        ci = stats.binomtest(k, self.count).proportion_ci(confidence_level=confidence, method="wilson")
        return k / self.count, (float(ci.low), float(ci.high))

    def second_moment(self) -> tuple[float, float]:
        """Mean of ``||z||^2`` and its standard error."""
        sq = self.norms() ** 2
        return float(np.mean(sq)), float(np.std(sq, ddof=1) / math.sqrt(self.count))

    def covariance_pairing(self, x: SeqVector, y: SeqVector) -> tuple[complex, float]:
        """Mean of ``<x, z> conj(<y, z>)`` and its standard error."""
        prod = self.coordinate_pairing(x) * np.conj(self.coordinate_pairing(y))
        return complex(np.mean(prod)), float(np.std(prod, ddof=1) / math.sqrt(self.count))


def pushforward(f: Observable, cfg: FactorMapConfig, sys: System, count: int, seed: int) -> PushforwardSample:
    if count <= 0:
        raise ValidationError("count must be positive")
    x = sample_mu(sys, count, seed)
    lo, rows = phi_batch(sys, f, cfg, x)
    rows.setflags(write=False)
    return PushforwardSample(lo, cfg.tag, rows, seed, count)


# ---------------------------------------------------------------------------
# correlations of the doubling map


@dataclass(frozen=True)
class CorrelationReport:
    n: int
    value: complex
    stdError: float
    mode: str
    samples: int

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "value": [self.value.real, self.value.imag],
            "stdError": self.stdError,
            "mode": self.mode,
            "samples": self.samples,
        }


def correlation(
    f: Observable,
    g: Observable,
    n: int,
    mode: str = "montecarlo",
    samples: int = 10**6,
    seed: int = 0,
    points: int | None = None,
    max_bits: int = 22,
) -> CorrelationReport:
    """``C_n(f, g) = int f(T^n x) conj(g(x)) dx - (int f) conj(int g)`` for the doubling map.

    Modes
    -----
    ``"exact"``
        step functions only; sums over all ``2^L`` dyadic cells with
        ``L = max(n + B_f, B_g) <= max_bits``.
    ``"montecarlo"``
        centred product estimator over ``samples`` states drawn from ``seed``.
    ``"quadrature"``
        periodic rectangle rule on ``points`` dyadic nodes (exact for
        trigonometric polynomials of degree below ``points - 1`` and for step
        functions of depth up to ``log2(points)``).
    """
    if n < 0:
        raise ValidationError("lag must be non-negative")
    sys = DoublingMap(bits=64 + n)
    if mode == "exact":
        if not (isinstance(f, StepFunction) and isinstance(g, StepFunction)):
            raise ValidationError("exact mode needs step functions")
        L = max(n + f.depth, g.depth)
        if L > max_bits:
            raise BudgetExceeded(f"exact correlation needs {L} digits, budget is {max_bits}")
        idx = np.arange(2**L, dtype=np.int64)
        fv = f.table[(idx >> (L - n - f.depth)) & ((1 << f.depth) - 1)]
        gv = g.table[idx >> (L - g.depth)]
        val = np.mean((fv - f.mean) * np.conj(gv - g.mean))
        return CorrelationReport(n, complex(val), 0.0, "exact", 2**L)
    if mode == "montecarlo":
        x = sample_mu(sys, samples, seed)
        fv = evaluate(sys, f, iterate(sys, x, n))
        gv = evaluate(sys, g, x)
        prod = (fv - fv.mean()) * np.conj(gv - gv.mean())
        se = float(np.std(prod, ddof=1) / math.sqrt(samples))
        return CorrelationReport(n, complex(np.mean(prod)), se, "montecarlo", samples)
    if mode == "quadrature":
        P = points or max(2 ** (n + 3), 1024)
        if P & (P - 1):
            raise ValidationError("quadrature needs a power-of-two number of points")
        xs = np.arange(P) / P
        shifted = np.mod(xs * 2.0**n, 1.0)  # exact for dyadic nodes
        ev = lambda h, t: h.table[np.minimum((t * 2**h.depth).astype(np.int64), 2**h.depth - 1)] if isinstance(h, StepFunction) else np.asarray(h(t), dtype=np.complex128)
        fv, gv = ev(f, shifted), ev(g, xs)
        fm, gm = ev(f, xs).mean(), gv.mean()
        val = np.mean((fv - fm) * np.conj(gv - gm))
        return CorrelationReport(n, complex(val), 0.0, "quadrature", P)
    raise ValidationError(f"unknown mode {mode!r}")


def decay_bound(n: int, f_l2: float, g_lip: float) -> float:
    """``2^{-n} ||f||_2 ||g'||_inf / sqrt(3)``."""
    return math.ldexp(f_l2 * g_lip / math.sqrt(3.0), -n)


@dataclass(frozen=True)
class DecayCertificate:
    n: int
    abs_value: float
    allowed: float
    passed: bool


def decay_certificate(report: CorrelationReport, f_l2: float, g_lip: float, sigmas: float = 3.0) -> DecayCertificate:
    """Compare ``|C_n|`` with the decay bound plus ``sigmas`` standard errors."""
    allowed = decay_bound(report.n, f_l2, g_lip) + sigmas * report.stdError
    a = abs(report.value)
    return DecayCertificate(report.n, a, allowed, a <= allowed)


def visit_lower_density(A: LinearOp, z: SeqVector, center: SeqVector, radius: float, N: int) -> tuple[float, float]:
    """Visit frequencies of ``A^n z`` to the open ball ``B(center, radius)``.

    With ``v_m = #{0 <= n < m : ||A^n z - center|| < radius}``, returns
    ``(min_{1<=m<=N} v_m / m, v_N / N)``.
    """
    if N < 1:
        raise ValidationError("N must be >= 1")
    v = z
    hits = 0
    lowest = math.inf
    for m in range(1, N + 1):
        if norm(v - center) < radius:
            hits += 1
        lowest = min(lowest, hits / m)
        if m < N:
            v = A.apply(v)
    return lowest, hits / N
