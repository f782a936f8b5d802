"""Rokhlin towers on the bilateral Bernoulli shift and one refinement step.

Coordinates follow ``(T^n x)_i = x_{i+n}``, so ``x`` lies on level ``k`` of
a tower with base ``E`` exactly when ``T^{-k} x`` is in ``E``, i.e. when the
base condition holds for ``x`` read from position ``-k``.

Small tower
    ``E`` = "the word ``P`` starts at 0 and nowhere else within distance
    ``2N``".  The levels ``T^k E``, ``|k| <= N``, are disjoint by the guard
    and their union has mass at most ``(2N+1) 2^-L``.
Full tower
    Markers ``1 0^{L'-1}`` cut the line into gaps; each gap is tiled from its
    left end by columns of ``2M+1`` positions and a column with centre ``b``
    is a base point.  Columns never straddle a marker start, so the levels
    ``|k| <= M`` are disjoint exactly; what is left over is the remainder of
    each gap plus the gaps longer than the lookback.

The scalar families realise the dense set of the separation lemma by seeded
random perturbation followed by an exhaustive check of every tuple sum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import stats
from scipy.spatial import cKDTree

from .errors import BudgetExceeded, ConstructionFailed, ValidationError
from .ergodic import BernoulliShift, BernoulliStates, FactorMapConfig, StepFunction, evaluate, phi_batch, sample_mu
from .operators import WeightedShift, orbit_vector
from .spaces import SeqVector, norm

__all__ = [
    "NO_LEVEL",
    "Cylinder",
    "TowerSpec",
    "build_small_tower",
    "build_full_tower",
    "sample_base_points",
    "ScalarFamily",
    "SeparationCertificate",
    "base_family",
    "separate_scalars",
    "split_scalars",
    "ConstructionState",
    "RefinedFunction",
    "initial_state",
    "expansion_coefficients",
    "refine_step",
    "PropertyResult",
    "VerificationReport",
    "verify_properties",
]

NO_LEVEL = np.iinfo(np.int64).min
GAP_FLOOR = 1e-12
DEFAULT_LIMITS = {"F": 3, "base": 6, "M": 8}


def _wilson(hits: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(hits), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _starts(W: NDArray[np.uint8], pattern: str) -> NDArray[np.bool_]:
    """``out[:, s]`` is true when ``pattern`` starts at column ``s`` of ``W``."""
    L = len(pattern)
    width = W.shape[1] - L + 1
    if width <= 0:
        return np.zeros((W.shape[0], 0), dtype=bool)
    out = np.ones((W.shape[0], width), dtype=bool)
    for i, ch in enumerate(pattern):
        out &= W[:, i : i + width] == (ch == "1")
    return out


def _window_count(S: NDArray[np.bool_]) -> NDArray[np.int64]:
    """Prefix sums with a leading zero column: ``cs[:, j] = sum S[:, :j]``."""
    cs = np.zeros((S.shape[0], S.shape[1] + 1), dtype=np.int64)
    np.cumsum(S, axis=1, out=cs[:, 1:])
    return cs


@dataclass(frozen=True)
class Cylinder:
    """``{x : x_i = bit for every (i, bit)}``; the empty cylinder is the whole space."""

    assignment: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        seen = {}
        for i, b in self.assignment:
            if b not in (0, 1):
                raise ValidationError(f"cylinder bits must be 0 or 1, got {b!r}")
            if seen.setdefault(int(i), b) != b:
                raise ValidationError(f"cylinder assigns two values to coordinate {i}")
        object.__setattr__(self, "assignment", tuple(sorted((int(i), int(b)) for i, b in seen.items())))

    @classmethod
    def parse(cls, data: Mapping | Sequence | None) -> "Cylinder":
        if data is None:
            return cls()
        items = data.items() if isinstance(data, Mapping) else data
        return cls(tuple((int(i), int(b)) for i, b in items))

    @property
    def mass(self) -> float:
        return 2.0 ** -len(self.assignment)

    def contains(self, states: BernoulliStates) -> NDArray[np.bool_]:
        out = np.ones(len(states), dtype=bool)
        for i, b in self.assignment:
            out &= states.bits(i, i + 1)[:, 0] == b
        return out

    def to_json(self) -> dict:
        return {str(i): b for i, b in self.assignment}


# ---------------------------------------------------------------------------
# towers


@dataclass(frozen=True)
class TowerSpec:
    """A tower over a pattern-defined base.

    ``height`` is ``N`` (small) or ``M`` (full).  ``guard`` is the exclusion
    radius ``2N`` of the small tower or the lookback ``R`` of the full one.
    ``mass`` is the analytic bound ``(2N+1) 2^-L`` for a small tower and the
    sampled coverage of the levels ``|k| <= M - d`` for a full one.
    """

    kind: str
    pattern: str
    height: int
    guard: int
    d: int = 0
    mass: float = 0.0
    empirical: float = 0.0
    mass_ci: tuple[float, float] = (0.0, 1.0)
    violations: int = 0
    samples: int = 0
    seed: int = 0
    attempts: tuple = ()

    @property
    def L(self) -> int:
        return len(self.pattern)

    # -- small tower -------------------------------------------------------

    def _small_hits(self, states: BernoulliStates) -> NDArray[np.bool_]:
        """``hits[:, j]``: base condition at position ``b = j - N``."""
        N, L, g = self.height, self.L, self.guard
        lo = -N - g
        W = states.bits(lo, N + g + L)
        St = _starts(W, self.pattern)  # starts at lo .. N + g
        cs = _window_count(St)
        b = np.arange(-N, N + 1)
        col = b - lo
        near = cs[:, col + g + 1] - cs[:, col - g]
        return St[:, col] & (near == 1)

    # -- full tower --------------------------------------------------------

    def _last_start(self, states: BernoulliStates, pos: int) -> NDArray[np.int64]:
        """Last marker start ``<= pos`` within ``guard + 2M`` positions, else ``NO_LEVEL``."""
        L = self.L
        limit = self.guard + 2 * self.height + 1
        out = np.full(len(states), NO_LEVEL, dtype=np.int64)
        todo = np.arange(len(states))
        hi, chunk = pos, 64
        while len(todo) and pos - hi < limit:
            lo = hi - chunk + 1
            W = states.take(todo).bits(lo, hi + L)
            St = _starts(W, self.pattern)  # starts at lo .. hi
            found = St.any(axis=1)
            last = St.shape[1] - 1 - np.argmax(St[:, ::-1], axis=1)
            out[todo[found]] = lo + last[found]
            todo = todo[~found]
            hi, chunk = lo - 1, chunk * 2
        out[(out != NO_LEVEL) & (pos - out > limit)] = NO_LEVEL
        return out

    def _full_levels(self, states: BernoulliStates) -> NDArray[np.int64]:
        M, R, L = self.height, self.guard, self.L
        H = 2 * M + 1
        s = self._last_start(states, 0)
        ok = s != NO_LEVEL
        t = np.where(ok, -s, 0)
        j, q = t // H, t % H
        ok &= j * H <= R
        # the column ends at 2M - q: no marker may start in 1 .. 2M - q
        St = _starts(states.bits(1, 2 * M + L), self.pattern)  # starts at 1 .. 2M
        cs = _window_count(St)
        ok &= cs[np.arange(len(states)), 2 * M - q] == 0
        return np.where(ok, q - M, NO_LEVEL)

    def _full_hits(self, states: BernoulliStates) -> NDArray[np.bool_]:
        """Base condition at ``b = -M .. M`` tested directly, independently of ``_full_levels``."""
        M, R, L = self.height, self.guard, self.L
        H = 2 * M + 1
        St = _starts(states.bits(-2 * M, 2 * M + L), self.pattern)  # starts at -2M .. 2M
        before = self._last_start(states, -2 * M - 1)
        pos = np.arange(-2 * M, 2 * M + 1)
        cs = _window_count(St)
        hits = np.zeros((len(states), H), dtype=bool)
        for idx, b in enumerate(range(-M, M + 1)):
            edge = b - M
            upto = St[:, : edge + 2 * M + 1]
            has = upto.any(axis=1)
            last = np.where(has, pos[upto.shape[1] - 1 - np.argmax(upto[:, ::-1], axis=1)], before)
            valid = last != NO_LEVEL
            gap = np.where(valid, edge - last, 0)
            clear = (cs[:, b + M + 2 * M + 1] - cs[:, edge + 2 * M + 1]) == 0
            hits[:, idx] = valid & (gap % H == 0) & (gap <= R) & clear
        return hits

    # -- common ------------------------------------------------------------

    def hits(self, states: BernoulliStates) -> NDArray[np.bool_]:
        """Base condition at every candidate position ``b = -H .. H`` (``level = -b``)."""
        return self._small_hits(states) if self.kind == "small" else self._full_hits(states)

    def levels(self, states: BernoulliStates) -> NDArray[np.int64]:
        """Tower level of every state, ``NO_LEVEL`` off the tower."""
        if self.kind == "full":
            return self._full_levels(states)
        hits = self._small_hits(states)
        H = self.height
        any_hit = hits.any(axis=1)
        b = np.argmax(hits, axis=1) - H
        return np.where(any_hit, -b, NO_LEVEL)

    def collisions(self, states: BernoulliStates) -> int:
        """States lying on two or more levels (tested directly from the base condition)."""
        return int(np.sum(self.hits(states).sum(axis=1) > 1))

    def covered(self, states: BernoulliStates) -> NDArray[np.bool_]:
        """Membership in ``C = union of the levels |k| <= height - d``."""
        k = self.levels(states)
        return (k != NO_LEVEL) & (np.abs(np.where(k == NO_LEVEL, 0, k)) <= self.height - self.d)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "pattern": self.pattern,
            "height": self.height,
            "guard": self.guard,
            "d": self.d,
            "mass": self.mass,
            "empiricalMass": self.empirical,
            "massCI": list(self.mass_ci),
            "violations": self.violations,
            "samples": self.samples,
            "seed": self.seed,
            "attempts": [list(a) for a in self.attempts],
        }


def build_small_tower(
    sys: BernoulliShift,
    N: int,
    eta: float,
    seed: int = 0,
    samples: int = 100_000,
    max_len: int = 40,
    margin: float = 2.0,
) -> TowerSpec:
    """Base ``1 0^{L-1}`` with the smallest ``L`` such that ``(2N+1) 2^-L < eta / margin``.

    The default margin keeps the sampled mass, not only its analytic bound,
    well below ``eta``.
    """
    if not isinstance(sys, BernoulliShift):
        raise ValidationError("towers are built on the bilateral Bernoulli shift")
    if N < 0:
        raise ValidationError("N must be >= 0")
    if not 0 < eta < 1:
        raise ValidationError("eta must lie in (0, 1)")
    if margin < 1:
        raise ValidationError("margin must be >= 1")
    L = 1
    while (2 * N + 1) * 2.0**-L >= eta / margin:
        L += 1
    if L > max_len:
        raise ConstructionFailed(f"a small tower of height {N} below mass {eta} needs a word of length {L} > {max_len}")
    pattern = "1" + "0" * (L - 1)
    tower = TowerSpec("small", pattern, N, 2 * N, 0, (2 * N + 1) * 2.0**-L)
    states = sample_mu(sys, samples, seed)
    hits = tower.hits(states)
    count = hits.sum(axis=1)
    inside = int(np.sum(count > 0))
    return TowerSpec(
        "small",
        pattern,
        N,
        2 * N,
        0,
        tower.mass,
        inside / samples,
        _wilson(inside, samples),
        int(np.sum(count > 1)),
        samples,
        seed,
    )


def build_full_tower(
    sys: BernoulliShift,
    M: int,
    d: int,
    eta: float,
    seed: int = 0,
    samples: int = 100_000,
    max_marker: int = 12,
    lookback_factor: int = 16,
) -> TowerSpec:
    """Kac-style column tower; the marker grows until the Wilson lower bound of coverage reaches ``1 - eta``."""
    if not isinstance(sys, BernoulliShift):
        raise ValidationError("towers are built on the bilateral Bernoulli shift")
    if not 0 < eta < 1:
        raise ValidationError("eta must lie in (0, 1)")
    if not 0 <= d <= M:
        raise ValidationError("need 0 <= d <= M")
    H = 2 * M + 1
    ceiling = (2 * (M - d) + 1) / H
    if ceiling < 1 - eta:
        # every column spends 2d of its 2M+1 cells outside |k| <= M - d
        raise ConstructionFailed(f"coverage of |k| <= {M - d} is at most {ceiling:.4f} < {1 - eta}")
    states = sample_mu(sys, samples, seed)
    attempts = []
    for Lm in range(max(2, math.ceil(math.log2(H)) + 1), max_marker + 1):
        pattern = "1" + "0" * (Lm - 1)
        R = lookback_factor * 2**Lm
        trial = TowerSpec("full", pattern, M, R, d)
        hits = int(np.sum(trial.covered(states)))
        low, high = _wilson(hits, samples)
        attempts.append((Lm, hits / samples, low))
        if low >= 1 - eta:
            return TowerSpec(
                "full",
                pattern,
                M,
                R,
                d,
                hits / samples,
                hits / samples,
                (low, high),
                trial.collisions(states),
                samples,
                seed,
                tuple(attempts),
            )
    raise ConstructionFailed(f"no marker up to length {max_marker} reaches coverage {1 - eta}: {attempts}")


def sample_base_points(tower: TowerSpec, count: int, seed: int, window: int = 4096) -> BernoulliStates:
    """States on level 0 of a small tower, found by scanning long stretches of random sequences."""
    if tower.kind != "small":
        raise ValidationError("base sampling is implemented for small towers")
    rng = np.random.default_rng(seed)
    L, g = tower.L, tower.guard
    seeds, offsets = [], []
    need = count
    batch = max(8, int(2 * count * 2.0**L / window) + 1)
    while need > 0:
        s = rng.integers(0, 2**64, size=batch, dtype=np.uint64)
        W = BernoulliStates(s, 0).bits(0, window)
        St = _starts(W, tower.pattern)
        cs = _window_count(St)
        b = np.arange(g, St.shape[1] - g)
        base = St[:, b] & ((cs[:, b + g + 1] - cs[:, b - g]) == 1)
        rows, cols = np.nonzero(base)
        seeds.append(s[rows])
        offsets.append(b[cols])
        need -= len(rows)
    x = BernoulliStates(np.concatenate(seeds)[:count], np.concatenate(offsets)[:count])
    if not np.all(tower.levels(x) == 0):
        raise ConstructionFailed("base sampler produced a point off level 0")
    return x


# ---------------------------------------------------------------------------
# scalar families


@dataclass(frozen=True)
class SeparationCertificate:
    tuples: int
    checked_tuples: int
    min_gap: float
    value_gap: float
    retries: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.min_gap >= GAP_FLOOR and self.value_gap >= GAP_FLOOR

    def to_json(self) -> dict:
        return {
            "tuples": self.tuples,
            "checkedTuples": self.checked_tuples,
            "minGap": self.min_gap,
            "valueGap": self.value_gap,
            "retries": self.retries,
            "seed": self.seed,
            "passed": self.passed,
        }


@dataclass(frozen=True, eq=False)
class ScalarFamily:
    """``c_l`` (base), ``c_{l,k}`` (towered) or ``c_{l,k,theta}`` (split).

    ``values`` holds a dense array: shape ``(n,)``, ``(n, 2M+1)`` or
    ``(n, 2M+1, 2)``, with ``k`` stored at column ``k + M``.  A split family
    also carries ``residual[l, theta]``, the splits of the base values used
    off the full tower.
    """

    level: str
    values: NDArray[np.complex128] = field(repr=False)
    F: tuple[int, ...]
    cp: tuple[complex, ...]
    M: int
    d: int
    residual: NDArray[np.complex128] | None = field(default=None, repr=False)
    parent: "ScalarFamily | None" = field(default=None, repr=False)
    certificate: SeparationCertificate | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.residual is not None:
            r = np.array(self.residual, dtype=np.complex128)
            r.setflags(write=False)
            object.__setattr__(self, "residual", r)

    @property
    def size(self) -> int:
        """Number of base values ``l_max + 1``."""
        return self.values.shape[0]

    def value(self, *key: int) -> complex:
        """``c_l``, ``c_{l,k}`` or ``c_{l,k,theta}`` in the construction's index order."""
        if self.level == "base":
            (l,) = key
            return complex(self.values[l])
        l, k, *rest = key
        if abs(k) > self.M:
            raise ValidationError(f"level {k} outside |k| <= {self.M}")
        return complex(self.values[(l, k + self.M, *rest)])

    def all_values(self) -> NDArray[np.complex128]:
        parts = [self.values.reshape(-1)]
        if self.residual is not None:
            parts.append(self.residual.reshape(-1))
        return np.concatenate(parts)

    def to_json(self) -> dict:
        def pairs(a):
            return [[float(z.real), float(z.imag)] for z in np.asarray(a).reshape(-1)]

        out = {
            "level": self.level,
            "shape": list(self.values.shape),
            "values": pairs(self.values),
            "F": list(self.F),
            "cp": pairs(self.cp),
            "M": self.M,
            "d": self.d,
        }
        if self.residual is not None:
            out["residual"] = pairs(self.residual)
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        return out


def base_family(values: Sequence[complex], F: Sequence[int], cp: Sequence[complex], M: int, d: int | None = None) -> ScalarFamily:
    """The distinct base scalars ``c_l`` together with the pairing data ``(F, c_p)``."""
    F = tuple(int(p) for p in F)
    cp = tuple(complex(c) for c in cp)
    if len(F) != len(cp) or not F:
        raise ValidationError("F and cp must be non-empty and of equal length")
    if len(set(F)) != len(F):
        raise ValidationError("F has repeated elements")
    d = max(abs(p) for p in F) if d is None else int(d)
    if d < max(abs(p) for p in F):
        raise ValidationError("d must be at least max |p| over F")
    if M < d:
        raise ValidationError("M must be at least d")
    v = np.array(values, dtype=np.complex128).reshape(-1)
    if len(v) == 0:
        raise ValidationError("at least one base value is required")
    if len(set(complex(z) for z in v)) != len(v):
        raise ValidationError("base values must be distinct")
    return ScalarFamily("base", v, F, cp, int(M), d)


def _min_gap(points: NDArray[np.complex128]) -> float:
    if len(points) < 2:
        return math.inf
    xy = np.column_stack([points.real, points.imag])
    dist, _ = cKDTree(xy).query(xy, k=2)
    return float(np.min(dist[:, 1]))


def _tuple_sums(V: NDArray, F: tuple[int, ...], cp: tuple[complex, ...], M: int, d: int):
    """Every sum ``sum_p c_p V[tau(p), k+p (, theta(p))]`` with ``|k| <= M - d``.

    Returns ``(sums, head)`` where ``head`` is the value at ``p = 0`` (or
    ``None`` if ``0`` is not in ``F``), both flattened in the same order.
    """
    m = len(F)
    n = V.shape[0]
    ks = np.arange(-(M - d), M - d + 1)
    tau = np.array(list(itertools.product(range(n), repeat=m)), dtype=np.int64).reshape(-1, m)
    split = V.ndim == 3
    theta = np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.int64) if split else np.zeros((1, m), np.int64)
    sums = np.zeros((len(tau), len(theta), len(ks)), dtype=np.complex128)
    head = None
    for i, (p, c) in enumerate(zip(F, cp)):
        col = ks + p + M
        if split:
            term = V[tau[:, i][:, None, None], col[None, None, :], theta[:, i][None, :, None]]
        else:
            term = V[tau[:, i][:, None, None], col[None, None, :]] * np.ones((1, 1, 1))
        sums += c * term
        if p == 0:
            head = term
    if head is not None:
        head = np.broadcast_to(head, sums.shape).reshape(-1)
    return sums.reshape(-1), head


def _check_budget(F, n: int, M: int, limits: Mapping | None) -> None:
    lim = dict(DEFAULT_LIMITS, **(limits or {}))
    if len(F) > lim["F"] or n > lim["base"] or M > lim["M"]:
        raise BudgetExceeded(
            f"exhaustive check limited to |F| <= {lim['F']}, base size <= {lim['base']}, M <= {lim['M']}; "
            f"got |F| = {len(F)}, base size {n}, M = {M}"
        )


def _disk(rng: np.random.Generator, shape, radius: float) -> NDArray[np.complex128]:
    """Uniform draws from the open disk of the given radius."""
    rho = radius * np.sqrt(rng.random(shape))
    return rho * np.exp(2j * np.pi * rng.random(shape))


def separate_scalars(
    base: ScalarFamily,
    gamma_half: float,
    seed: int = 0,
    max_retries: int = 10,
    limits: Mapping | None = None,
) -> ScalarFamily:
    """Towered scalars ``c_{l,k}`` within ``gamma_half`` of ``c_l`` with all tuple sums separated."""
    if base.level != "base":
        raise ValidationError("separate_scalars takes a base family")
    if gamma_half <= 0:
        raise ValidationError("gamma_half must be positive")
    _check_budget(base.F, base.size, base.M, limits)
    if not any(base.cp):
        raise ConstructionFailed("all pairing constants vanish, so every tuple sum is 0")
    rng = np.random.default_rng(seed)
    n, H = base.size, 2 * base.M + 1
    for attempt in range(max_retries + 1):
        V = base.values[:, None] + _disk(rng, (n, H), gamma_half)
        sums, _ = _tuple_sums(V, base.F, base.cp, base.M, base.d)
        cert = SeparationCertificate(
            len(sums),
            len(sums) * (len(sums) - 1),
            _min_gap(sums),
            _min_gap(np.concatenate([V.reshape(-1), base.values])),
            attempt,
            seed,
        )
        if cert.passed:
            return ScalarFamily("towered", V, base.F, base.cp, base.M, base.d, parent=base, certificate=cert)
    raise ConstructionFailed(f"no separated draw after {max_retries} retries (minGap {cert.min_gap:.3e})")


def split_scalars(
    towered: ScalarFamily,
    gamma_half: float,
    seed: int = 0,
    max_retries: int = 10,
    limits: Mapping | None = None,
) -> ScalarFamily:
    """Split scalars ``c_{l,k,0}, c_{l,k,1}``, each within ``gamma_half / 2`` of ``c_{l,k}``.

    The base values are split the same way (``residual``); those are only
    required to be distinct from everything else.
    """
    if towered.level != "towered":
        raise ValidationError("split_scalars takes a towered family")
    if towered.certificate is None:
        raise ValidationError("the towered family carries no separation certificate")
    if gamma_half <= 0:
        raise ValidationError("gamma_half must be positive")
    _check_budget(towered.F, towered.size, towered.M, limits)
    if not any(towered.cp):
        raise ConstructionFailed("all pairing constants vanish, so every tuple sum is 0")
    base = towered.parent
    rng = np.random.default_rng(seed)
    n, H = towered.size, 2 * towered.M + 1
    for attempt in range(max_retries + 1):
        V = towered.values[:, :, None] + _disk(rng, (n, H, 2), gamma_half / 2)
        res = base.values[:, None] + _disk(rng, (n, 2), gamma_half / 2)
        sums, _ = _tuple_sums(V, towered.F, towered.cp, towered.M, towered.d)
        cert = SeparationCertificate(
            len(sums),
            len(sums) * (len(sums) - 1),
            _min_gap(sums),
            _min_gap(np.concatenate([V.reshape(-1), res.reshape(-1)])),
            attempt,
            seed,
        )
        if cert.passed:
            return ScalarFamily(
                "split", V, towered.F, towered.cp, towered.M, towered.d, res, parent=towered, certificate=cert
            )
    raise ConstructionFailed(f"no separated draw after {max_retries} retries (minGap {cert.min_gap:.3e})")


# ---------------------------------------------------------------------------
# the refinement step


def _range(f) -> frozenset[complex]:
    if isinstance(f, RefinedFunction):
        return f.range
    if isinstance(f, StepFunction):
        return frozenset(complex(z) for z in f.table)
    raise ValidationError(f"cannot determine the range of {f!r}")


@dataclass(frozen=True, eq=False)
class RefinedFunction:
    """``f_{n+1}`` through its three stages ``g``, ``h`` and the ``Q``-split."""

    prev: object
    small: TowerSpec
    full: TowerSpec
    target: tuple[tuple[int, complex], ...]  # (k, a_k), |k| <= d_u
    split: ScalarFamily
    q: Cylinder

    @property
    def towered(self) -> ScalarFamily:
        return self.split.parent

    @property
    def base(self) -> ScalarFamily:
        return self.split.parent.parent

    @property
    def range(self) -> frozenset[complex]:
        return frozenset(complex(z) for z in self.split.all_values())

    def g_values(self, sys, x: BernoulliStates) -> tuple[NDArray[np.complex128], NDArray[np.int64]]:
        """``g_{n+1}(x)`` and the small-tower level of every state."""
        ks = self.small.levels(x)
        g = np.array(evaluate(sys, self.prev, x), dtype=np.complex128)
        on = ks != NO_LEVEL
        g[on] = 0
        for k, a in self.target:
            g[ks == k] = a
        return g, ks

    def components(self, sys, x: BernoulliStates) -> dict[str, NDArray]:
        """Every intermediate quantity of the three-stage definition."""
        if not isinstance(sys, BernoulliShift):
            raise ValidationError("refined functions live on the Bernoulli shift")
        g, ks = self.g_values(sys, x)
        lookup = {complex(z): i for i, z in enumerate(self.base.values)}
        uniq, inv = np.unique(g, return_inverse=True)
        try:
            l = np.array([lookup[complex(z)] for z in uniq], dtype=np.int64)[inv.reshape(-1)]
        except KeyError as exc:
            raise ValidationError(f"g takes the value {exc.args[0]} outside the base family") from None
        kf = self.full.levels(x)
        theta = np.where(self.q.contains(x), 0, 1)
        M = self.full.height
        on = kf != NO_LEVEL
        h = self.base.values[l].copy()
        h[on] = self.towered.values[l[on], kf[on] + M]
        f = self.split.residual[l, theta]
        f[on] = self.split.values[l[on], kf[on] + M, theta[on]]
        return {"small": ks, "g": g, "l": l, "full": kf, "h": h, "theta": theta, "f": f}

    def evaluate_states(self, sys, x: BernoulliStates) -> NDArray[np.complex128]:
        return self.components(sys, x)["f"]


@dataclass(frozen=True, eq=False)
class ConstructionState:
    """``f_n`` with the bookkeeping sets of the induction.

    ``E[i] = (E_{i,0}, E_{i,1})`` as sets of scalars; ``Q[i]`` cylinders;
    ``H[i]`` the small towers whose union is ``H_i``; ``targets[i]`` is
    ``(a, r)`` describing ``U_i`` (``None`` for ``U_0 = Z``).
    """

    n: int
    f: object
    E: tuple[tuple[frozenset, frozenset], ...]
    Q: tuple[Cylinder, ...]
    H: tuple[tuple[TowerSpec, ...], ...]
    targets: tuple
    F: tuple[int, ...]
    cp: tuple[complex, ...]
    gamma: float = 0.0

    @property
    def range(self) -> frozenset[complex]:
        return _range(self.f)


def initial_state(F: Sequence[int], cp: Sequence[complex]) -> ConstructionState:
    """``f_0 = 0``, ``E_{0,0} = {0}``, ``E_{0,1}`` empty, ``Q_0 = X``, ``H_0`` empty."""
    F = tuple(int(p) for p in F)
    if 0 not in F:
        raise ValidationError("the construction needs 0 in F")
    return ConstructionState(
        0,
        StepFunction.constant(0.0, bilateral=True),
        ((frozenset({0j}), frozenset()),),
        (Cylinder(),),
        ((),),
        (None,),
        F,
        tuple(complex(c) for c in cp),
    )


def expansion_coefficients(u: SeqVector, S: WeightedShift) -> dict[int, complex]:
    """``a_k`` with ``u = sum_k a_k z_{-k}``; for a weighted shift ``z_{-k}`` is a multiple of ``e_k``."""
    out = {}
    for n in u.support():
        z = orbit_vector(S, -n)
        out[n] = complex(u[n] / z[n])
    return out


def refine_step(
    state: ConstructionState,
    target: Mapping[int, complex],
    small: TowerSpec,
    full: TowerSpec,
    q: Cylinder,
    gamma: float,
    r: float,
    seed: int = 0,
    split: ScalarFamily | None = None,
    limits: Mapping | None = None,
) -> ConstructionState:
    """One step ``f_n -> f_{n+1}`` toward ``u = sum_k a_k z_{-k}``."""
    if small.kind != "small" or full.kind != "full":
        raise ValidationError("refine_step needs a small and a full tower")
    a = {int(k): complex(v) for k, v in target.items()}
    if not a or max(abs(v) for v in a.values()) == 0:
        raise ValidationError("the target needs a non-zero coefficient")
    d_u = max(abs(k) for k in a)
    a = tuple((k, a.get(k, 0j)) for k in range(-d_u, d_u + 1))
    if small.height < d_u:
        raise ValidationError(f"the small tower height {small.height} is below the target degree {d_u}")
    dF = max(abs(p) for p in state.F)
    if full.d < dF:
        raise ValidationError(f"the full tower must use d >= max |F| = {dF}")
    if gamma <= 0 or r <= 0:
        raise ValidationError("gamma and r must be positive")

    values = set(state.range) | {0j} | {v for _, v in a}
    base_values = sorted(values, key=lambda z: (z.real, z.imag))
    if split is None:
        base = base_family(base_values, state.F, state.cp, full.height, full.d)
        towered = separate_scalars(base, gamma / 2, seed, limits=limits)
        split = split_scalars(towered, gamma / 2, seed + 1, limits=limits)
    else:
        if split.level != "split" or split.certificate is None or split.parent.certificate is None:
            raise ValidationError("the supplied split family is missing its separation certificates")
        if [complex(z) for z in split.parent.parent.values] != base_values:
            raise ValidationError("the supplied family was built on a different base range")
        if split.M != full.height or split.d != full.d:
            raise ValidationError("the supplied family does not match the full tower")

    f = RefinedFunction(state.f, small, full, a, split, q)
    n, H = split.size, 2 * split.M + 1
    E = []
    for E0, E1 in state.E:
        sets = []
        for Eold in (E0, E1):
            ls = [l for l, c in enumerate(base_values) if c in Eold]
            vals = np.concatenate([split.values[ls].reshape(-1), split.residual[ls].reshape(-1)])
            sets.append(frozenset(complex(z) for z in vals))
        E.append(tuple(sets))
    E.append(
        (
            frozenset(complex(z) for z in np.concatenate([split.values[..., 0].reshape(-1), split.residual[:, 0]])),
            frozenset(complex(z) for z in np.concatenate([split.values[..., 1].reshape(-1), split.residual[:, 1]])),
        )
    )
    assert len(f.range) == 2 * n * (H + 1)
    return ConstructionState(
        state.n + 1,
        f,
        tuple(E),
        state.Q + (q,),
        tuple(h + (small,) for h in state.H) + ((),),
        state.targets + ((a, float(r)),),
        state.F,
        state.cp,
        float(gamma),
    )


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: dict

    def to_json(self) -> dict:
        return {"passed": self.passed, **self.detail}


@dataclass(frozen=True)
class VerificationReport:
    properties: tuple[PropertyResult, ...]

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties)

    def __getitem__(self, name: str) -> PropertyResult:
        for p in self.properties:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"passed": self.passed, "properties": {p.name: p.to_json() for p in self.properties}}


def _in_towers(towers: Sequence[TowerSpec], x: BernoulliStates) -> NDArray[np.bool_]:
    out = np.zeros(len(x), dtype=bool)
    for t in towers:
        out |= t.levels(x) != NO_LEVEL
    return out


def _member(values: NDArray[np.complex128], S: frozenset) -> NDArray[np.bool_]:
    return np.array([complex(v) in S for v in values], dtype=bool)


def _nearest(points: NDArray[np.complex128], ref: NDArray[np.complex128]) -> NDArray[np.float64]:
    if len(ref) == 0:
        return np.full(len(points), math.inf)
    tree = cKDTree(np.column_stack([ref.real, ref.imag]))
    dist, _ = tree.query(np.column_stack([points.real, points.imag]))
    return dist


def verify_properties(
    state: ConstructionState,
    prev: ConstructionState,
    cfg: FactorMapConfig,
    samples: int = 10_000,
    seed: int = 0,
    functional: SeqVector | None = None,
) -> VerificationReport:
    """Check properties (1), (2b), (3c), (4b), (4c) and (6c) after one refinement step."""
    f = state.f
    if not isinstance(f, RefinedFunction) or state.n != prev.n + 1:
        raise ValidationError("verify_properties compares a refined state with its predecessor")
    sys = BernoulliShift()
    split, M, d = f.split, f.full.height, f.full.d
    n_base = split.size
    gamma = state.gamma
    props = []

    # (1) range partition, disjoint E-pairs, size formula
    rng_f = f.range
    union = frozenset().union(*[a | b for a, b in state.E])
    overlaps = [i for i, (a, b) in enumerate(state.E) if a & b]
    expected = 2 * n_base * (2 * M + 2)
    bound = 2 * (len(prev.range) + 1 + 2 * max(abs(k) for k, _ in f.target) + 1) * (2 * M + 2)
    props.append(
        PropertyResult(
            "1",
            rng_f == union and not overlaps and len(rng_f) == expected <= bound,
            {"rangeSize": len(rng_f), "formula": expected, "bound": bound, "unionMatches": rng_f == union, "overlaps": overlaps},
        )
    )

    # (2b) exhaustive D-set separation over the cells of C_{n+1}
    sums, head = _tuple_sums(split.values, split.F, split.cp, M, d)
    worst = math.inf
    per_i = []
    for i, (E0, E1) in enumerate(state.E):
        m0, m1 = _member(head, E0), _member(head, E1)
        gap = float(np.min(_nearest(sums[m1], sums[m0]))) if m0.any() and m1.any() else math.inf
        per_i.append(gap)
        worst = min(worst, gap)
    x = sample_mu(sys, samples, seed)
    inC = f.full.covered(x)
    xc = x.take(inC)
    actual = np.zeros(len(xc), dtype=np.complex128)
    for p, c in zip(split.F, split.cp):
        actual += c * evaluate(sys, f, xc.shifted(p))
    miss = float(np.max(_nearest(actual, sums), initial=0.0))
    props.append(
        PropertyResult(
            "2b",
            worst > GAP_FLOOR and miss <= GAP_FLOOR,
            {
                "enumerated": len(sums),
                "minGap": worst,
                "perIndex": per_i,
                "sampledInC": int(inC.sum()),
                "sampledMaxDistanceToEnumeration": miss,
            },
        )
    )

    # (3c) symbolic inclusion and sampled membership
    base_values = [complex(z) for z in f.base.values]
    sym_ok = True
    for i, (E0, E1) in enumerate(prev.E):
        for l, c in enumerate(base_values):
            for theta, Eold in ((0, E0), (1, E1)):
                if c in Eold:
                    vals = set(complex(z) for z in split.values[l].reshape(-1)) | set(complex(z) for z in split.residual[l])
                    sym_ok &= vals <= state.E[i][theta]
    sym_ok &= set(complex(z) for z in split.values[..., 0].reshape(-1)) <= state.E[-1][0]
    comp = f.components(sys, x)
    bad = 0
    for i in range(state.n + 1):
        free = ~_in_towers(state.H[i], x)
        inQ = state.Q[i].contains(x)
        for want, mask in ((0, free & inQ), (1, free & ~inQ)):
            bad += int(np.sum(~_member(comp["f"][mask], state.E[i][want])))
    props.append(PropertyResult("3c", bool(sym_ok) and bad == 0, {"symbolic": bool(sym_ok), "sampled": samples, "violations": bad}))

    # (4b)/(4c) on B_{n+1}: no small-tower level within |k| <= K
    K = max(abs(k) for k, _ in cfg.terms())
    inB = np.ones(samples, dtype=bool)
    for k in range(-K, K + 1):
        inB &= f.small.levels(x.shifted(k)) == NO_LEVEL
    xb = x.take(inB)
    df = np.abs(comp["f"][inB] - evaluate(sys, prev.f, xb))
    max_df = float(np.max(df, initial=0.0))
    phi_bound = gamma * math.fsum(norm(cfg.z(m)) for _, m in cfg.terms())
    lo1, rows1 = phi_batch(sys, f, cfg, xb)
    lo0, rows0 = phi_batch(sys, prev.f, cfg, xb)
    if lo1 != lo0:
        raise ValidationError("factor-map windows disagree")
    dphi = float(np.max(_rownorm(rows1 - rows0, cfg), initial=0.0))
    props.append(PropertyResult("4b", max_df < gamma, {"sampledInB": int(inB.sum()), "maxDiff": max_df, "gamma": gamma}))
    props.append(PropertyResult("4c", dphi < phi_bound, {"sampledInB": int(inB.sum()), "maxDiff": dphi, "bound": phi_bound}))

    # (6c) on the small-tower base: ||Phi_f(x) - u|| < r
    a, r = state.targets[-1]
    u = SeqVector.zeros(cfg.tag)
    for k, ak in a:
        u = u + cfg.z(-k) * ak
    xe = sample_base_points(f.small, samples, seed + 1)
    lo, rows = phi_batch(sys, f, cfg, xe)
    diff = rows - u.window(lo, lo + rows.shape[1])[None, :]
    dev = _rownorm(diff, cfg)
    props.append(
        PropertyResult(
            "6c",
            bool(np.all(dev < r)),
            {"sampledBase": len(xe), "maxDistance": float(np.max(dev)), "r": r, "bound": phi_bound},
        )
    )

    # composition with the factor map: <z0*, Phi_f(x)> = sum_p c_p f(T^p x)
    if functional is not None:
        lo, rows = phi_batch(sys, f, cfg, x)
        lhs = rows @ functional.window(lo, lo + rows.shape[1])
        rhs = np.zeros(samples, dtype=np.complex128)
        for p, c in zip(state.F, state.cp):
            rhs += c * evaluate(sys, f, x.shifted(p))
        err = float(np.max(np.abs(lhs - rhs)))
        props.append(PropertyResult("composition", err <= 1e-12, {"maxError": err, "samples": samples}))

    again = f.evaluate_states(sys, x)
    props.append(PropertyResult("determinism", bool(np.array_equal(again, comp["f"])), {"samples": samples}))
    return VerificationReport(tuple(props))


def _rownorm(rows: NDArray[np.complex128], cfg: FactorMapConfig) -> NDArray[np.float64]:
    tag = cfg.tag
    if tag.is_c0:
        return np.max(np.abs(rows), axis=1, initial=0.0)
    return np.linalg.norm(rows, ord=tag.p, axis=1) if rows.shape[1] else np.zeros(rows.shape[0])
