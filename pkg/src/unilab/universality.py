"""Finite-horizon certificates for universality criteria.

Three groups of tools:

* weight classifiers for unilateral and bilateral weighted shifts on ``l_p``
  and ``c_0``, which never conclude convergence from partial sums alone: a
  :class:`TailRule` has to certify the tail, otherwise the verdict is
  ``Inconclusive``;
* a checker for the three orbit hypotheses (a bicyclic vector, a functional
  seeing only finitely many orbit points, unconditional summability of the
  backward orbit) on a finite window of the orbit;
* the interleaved-shift builder, which schedules block lengths so that the
  weighted summability series stays below 6.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ValidationError, WindowExhausted
from .operators import LinearOp, WeightedShift, backward_orbit, forward_orbit
from .spaces import SeqVector, norm

__all__ = [
    "Verdict",
    "TailRule",
    "WeightVerdict",
    "HypothesisResult",
    "CriterionReport",
    "InterleavedSystem",
    "classify_unilateral",
    "classify_bilateral",
    "check_theorem1",
    "shift_orbit",
    "build_interleaved",
    "smallest_exponent_above",
    "mixing_necessity_probe",
    "interleaved_shift",
    "schedule_lower_bounds",
]


class Verdict(str, Enum):
    YES = "Yes"
    NO = "No"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class TailRule:
    """How to bound the part of a series beyond the horizon.

    ``geometric``
        consecutive term ratios are at most ``r < 1`` from ``from_index`` on;
        checked on the horizon and assumed beyond it (the caller's claim).
    ``explicit``
        the caller supplies the tail bound ``value`` directly.
    ``monotone_growth``
        ``c_0`` only: ``|w_n| >= 1 + a/n`` from ``from_index`` on, which forces
        the weight products to infinity.
    ``none``
        no certificate; convergence can never be concluded.
    """

    kind: str = "none"
    r: float = 0.5
    from_index: int = 1
    value: float = 0.0
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in ("geometric", "explicit", "monotone_growth", "none"):
            raise ValidationError(f"unknown tail rule {self.kind!r}")
        if self.kind == "geometric" and not 0 < self.r < 1:
            raise ValidationError("geometric tail ratio must lie in (0, 1)")
        if self.kind == "explicit" and not (self.value >= 0 and math.isfinite(self.value)):
            raise ValidationError("explicit tail bound must be finite and >= 0")
        if self.kind == "monotone_growth" and not self.a > 0:
            raise ValidationError("monotone growth rate must be positive")
        if self.from_index < 1:
            raise ValidationError("tail rules start at an index >= 1")

    @classmethod
    def geometric(cls, r: float, from_index: int = 1) -> "TailRule":
        return cls("geometric", r=r, from_index=from_index)

    @classmethod
    def explicit(cls, value: float) -> "TailRule":
        return cls("explicit", value=value)

    @classmethod
    def monotone_growth(cls, a: float = 1.0, from_index: int = 1) -> "TailRule":
        return cls("monotone_growth", a=a, from_index=from_index)

    @classmethod
    def none(cls) -> "TailRule":
        return cls("none")

    @classmethod
    def parse(cls, text: str | dict | None) -> "TailRule":
        """Parse ``"geometric:0.25[:from]"``, ``"explicit:1e-3"``, ``"monotone_growth:1"``, ``"none"`` or a dict."""
        if text is None:
            return cls.none()
        if isinstance(text, dict):
            return cls(**text)
        kind, *args = text.split(":")
        if kind == "geometric":
            return cls.geometric(float(args[0]), int(args[1]) if len(args) > 1 else 1)
        if kind == "explicit":
            return cls.explicit(float(args[0]))
        if kind == "monotone_growth":
            return cls.monotone_growth(float(args[0]) if args else 1.0, int(args[1]) if len(args) > 1 else 1)
        if kind == "none":
            return cls.none()
        raise ValidationError(f"unknown tail rule {text!r}")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "from_index": self.from_index}
        if self.kind == "geometric":
            out["r"] = self.r
        elif self.kind == "explicit":
            out["value"] = self.value
        elif self.kind == "monotone_growth":
            out["a"] = self.a
        return out


@dataclass(frozen=True)
class WeightVerdict:
    universal: Verdict
    partial_sum: float
    tail_bound: float
    horizon: int
    reasons: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "universal": self.universal.value,
            "partialSum": self.partial_sum,
            "tailBound": self.tail_bound,
            "horizon": self.horizon,
            "reasons": list(self.reasons),
        }


def _materialize(w: Union[ArrayLike, Callable[[int], complex]], horizon: int) -> NDArray[np.float64]:
    """``|w_1|, ..., |w_horizon|`` from a sequence or a callable."""
    if callable(w):
        vals = np.array([w(n) for n in range(1, horizon + 1)], dtype=np.complex128)
    else:
        vals = np.asarray(w, dtype=np.complex128).reshape(-1)
        if len(vals) < horizon:
            raise WindowExhausted(f"{len(vals)} weights given for horizon {horizon}")
        vals = vals[:horizon]
    if not np.all(np.isfinite(vals)):
        raise ValidationError("weights must be finite")
    if np.any(vals == 0):
        raise ValidationError("weights must be non-zero")
    return np.abs(vals)


def _lp_verdict(absw: NDArray, p: float, rule: TailRule) -> WeightVerdict:
    H = len(absw)
    log_prod = np.cumsum(np.log(absw))
    terms = np.exp(-p * log_prod)  # 1/|w_1...w_n|^p, n = 1..H
    partial = float(math.fsum(terms))
    start = rule.from_index - 1
    reasons = []
    # divergence witness: from some index on the terms never decrease
    if start < H - 1 and np.all(absw[start + 1 :] <= 1.0):
        reasons.append(
            f"terms are non-decreasing from n={rule.from_index} (|w_n| <= 1), so they do not tend to 0"
        )
        return WeightVerdict(Verdict.NO, partial, math.inf, H, tuple(reasons))
    if rule.kind == "geometric":
        ratios = absw[start + 1 :] ** (-p)  # t_{n+1} / t_n
        if start >= H - 1:
            reasons.append("geometric rule starts beyond the horizon")
        elif np.all(ratios <= rule.r * (1 + 1e-12)):
            tail = float(terms[-1] * rule.r / (1 - rule.r))
            reasons.append(f"term ratios <= {rule.r} on [{rule.from_index}, {H}]; geometric tail")
            return WeightVerdict(Verdict.YES, partial, tail, H, tuple(reasons))
        else:
            bad = int(np.argmax(ratios > rule.r * (1 + 1e-12))) + start + 2
            reasons.append(f"geometric rule violated at n={bad}")
    elif rule.kind == "explicit":
        reasons.append("tail bound supplied explicitly")
        return WeightVerdict(Verdict.YES, partial, rule.value, H, tuple(reasons))
    elif rule.kind == "monotone_growth":
        reasons.append("monotone-growth certificates apply to c_0 only")
    else:
        reasons.append("no tail certificate")
    return WeightVerdict(Verdict.INCONCLUSIVE, partial, math.inf, H, tuple(reasons))


def _c0_verdict(absw: NDArray, rule: TailRule) -> WeightVerdict:
    """Certify ``|w_1 ... w_n| -> +inf``; the reported sum is the last inverse product."""
    H = len(absw)
    log_prod = np.cumsum(np.log(absw))
    inv = np.exp(-log_prod)
    last = float(inv[-1])
    start = rule.from_index - 1
    reasons = []
    if start < H - 1 and np.all(absw[start + 1 :] <= 1.0):
        reasons.append(f"products are non-increasing from n={rule.from_index}, hence bounded")
        return WeightVerdict(Verdict.NO, last, math.inf, H, tuple(reasons))
    if rule.kind == "geometric":
        if start < H and np.all(absw[start:] >= (1 / rule.r) * (1 - 1e-12)):
            reasons.append(f"|w_n| >= 1/{rule.r} from n={rule.from_index}: products grow geometrically")
            return WeightVerdict(Verdict.YES, last, last, H, tuple(reasons))
        reasons.append("geometric growth rule violated on the horizon")
    elif rule.kind == "monotone_growth":
        n = np.arange(1, H + 1)
        need = 1 + rule.a / n
        if start < H and np.all(absw[start:] >= need[start:] * (1 - 1e-12)):
            reasons.append(
                f"|w_n| >= 1 + {rule.a}/n from n={rule.from_index}: products grow like n^{rule.a}"
            )
            return WeightVerdict(Verdict.YES, last, last, H, tuple(reasons))
        reasons.append("monotone growth rule violated on the horizon")
    elif rule.kind == "explicit":
        reasons.append("explicit bounds do not certify divergence of products")
    else:
        reasons.append("no growth certificate")
    return WeightVerdict(Verdict.INCONCLUSIVE, last, math.inf, H, tuple(reasons))


def classify_unilateral(
    w: Union[ArrayLike, Callable[[int], complex]],
    p: float | None = 2.0,
    horizon: int = 64,
    tail_rule: TailRule | None = None,
    c0_reading: str = "proof",
) -> WeightVerdict:
    """Decide whether the unilateral shift ``B_w`` is universal.

    Parameters
    ----------
    w : sequence or callable
        Weights ``w_1, w_2, ...`` (a sequence) or ``n -> w_n``.
    p : float or None
        Exponent of ``l_p``; ``None`` means ``c_0``.
    horizon : int
        Number of weights examined, at least 8.
    tail_rule : TailRule
        Certificate for the behaviour beyond the horizon.
    c0_reading : {"proof", "statement"}
        For ``c_0``: ``"proof"`` tests ``|w_1...w_n| -> +inf``; ``"statement"``
        tests ``|w_1...w_n| -> 0``.
    """
    if horizon < 8:
        raise ValidationError("horizon must be at least 8")
    rule = tail_rule or TailRule.none()
    absw = _materialize(w, horizon)
    if p is None:
        if c0_reading == "proof":
            return _c0_verdict(absw, rule)
        if c0_reading == "statement":
            return _c0_verdict(1 / absw, rule)
        raise ValidationError(f"unknown c0 reading {c0_reading!r}")
    if not p >= 1:
        raise ValidationError("p must be >= 1")
    return _lp_verdict(absw, float(p), rule)


def _combine(pos: WeightVerdict, neg: WeightVerdict) -> WeightVerdict:
    if Verdict.NO in (pos.universal, neg.universal):
        v = Verdict.NO
    elif pos.universal == neg.universal == Verdict.YES:
        v = Verdict.YES
    else:
        v = Verdict.INCONCLUSIVE
    reasons = tuple(f"positive side: {r}" for r in pos.reasons) + tuple(f"negative side: {r}" for r in neg.reasons)
    return WeightVerdict(v, pos.partial_sum + neg.partial_sum, pos.tail_bound + neg.tail_bound, pos.horizon, reasons)


def classify_bilateral(
    w: Union[Callable[[int], complex], Mapping[int, complex]],
    p: float | None = 2.0,
    horizon: int = 64,
    tail_rules: TailRule | tuple[TailRule, TailRule] | None = None,
    c0_reading: str = "proof",
) -> WeightVerdict:
    """Decide whether the bilateral shift ``S_w`` is universal.

    For ``l_p`` both series ``sum 1/|w_1...w_n|^p`` and
    ``sum |w_0 w_{-1} ... w_{-(n-1)}|^p`` must converge.  For ``c_0`` the
    ``"proof"`` reading asks for ``|w_1...w_n| -> +inf`` and
    ``|w_0...w_{-(n-1)}| -> 0``; ``"statement"`` swaps the two limits.

    ``w`` is a callable ``n -> w_n`` or a mapping covering ``1-horizon .. horizon``.
    """
    get = w if callable(w) else (lambda n: w[n])
    if isinstance(tail_rules, tuple):
        pos_rule, neg_rule = tail_rules
    else:
        pos_rule = neg_rule = tail_rules or TailRule.none()
    try:
        pos = [get(n) for n in range(1, horizon + 1)]
        neg = [get(-(n - 1)) for n in range(1, horizon + 1)]
    except KeyError as exc:
        raise WindowExhausted(f"missing weight {exc}") from None
    # |w_0 ... w_{-(n-1)}| = 1 / |v_1 ... v_n| with v_n = 1 / w_{-(n-1)}
    neg_inv = [1 / complex(x) if x != 0 else 0 for x in neg]
    if c0_reading == "statement" and p is None:
        pv = classify_unilateral(pos, None, horizon, pos_rule, "statement")
        nv = classify_unilateral(neg_inv, None, horizon, neg_rule, "statement")
    else:
        pv = classify_unilateral(pos, p, horizon, pos_rule, c0_reading)
        nv = classify_unilateral(neg_inv, p, horizon, neg_rule, c0_reading)
    return _combine(pv, nv)


# ---------------------------------------------------------------------------
# orbit hypotheses


@dataclass(frozen=True)
class HypothesisResult:
    verdict: str  # "pass" | "fail" | "inconclusive"
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CriterionReport:
    hypA: list[tuple[int, float]]
    hypB: dict
    hypC: dict
    verdicts: dict[str, str]
    consistency: float
    functional: SeqVector | None = None

    def to_json(self) -> dict:
        return {
            "hypA": [[j, r] for j, r in self.hypA],
            "hypB": self.hypB,
            "hypC": self.hypC,
            "verdicts": self.verdicts,
            "orbitConsistency": self.consistency,
        }


def shift_orbit(S: WeightedShift, n_range: int) -> dict[int, SeqVector]:
    """``{n: z_n}`` for ``|n| <= n_range`` with ``z_0 = e_0`` (or ``f_0``)."""
    orbit = {-n: backward_orbit(S, n) for n in range(n_range + 1)}
    for n in range(1, n_range + 1):
        orbit[n] = forward_orbit(S, n)
    return orbit


def _dense(vectors: Sequence[SeqVector]) -> tuple[int, NDArray[np.complex128]]:
    nonempty = [v for v in vectors if len(v)]
    lo = min((v.lo for v in nonempty), default=0)
    hi = max((v.hi for v in nonempty), default=0)
    return lo, np.array([v.window(lo, hi) for v in vectors]).reshape(len(vectors), hi - lo)


def _geometric_tail(norms: NDArray, rule: TailRule) -> tuple[float, str]:
    """Tail bound for a series of non-negative norms listed in order of |n|."""
    if len(norms) == 0:
        return 0.0, "empty"
    last_nz = np.flatnonzero(norms)
    if len(last_nz) == 0 or last_nz[-1] < len(norms) - 1:
        return 0.0, "orbit vanishes exactly (annihilated by a power of A)"
    if len(norms) >= 2 and np.all(norms[1:] >= norms[:-1] * (1 - 1e-12)):
        return math.inf, "norms do not decrease: divergence witness"
    if rule.kind == "explicit":
        return rule.value, "explicit"
    if rule.kind == "geometric":
        s = rule.from_index
        seg = norms[s:]
        if len(seg) >= 2 and np.all(seg[1:] <= rule.r * seg[:-1] * (1 + 1e-12)):
            return float(seg[-1] * rule.r / (1 - rule.r)), f"geometric ratio {rule.r}"
        return math.inf, "geometric rule violated"
    return math.inf, "no tail certificate"


def check_theorem1(
    orbit: Mapping[int, SeqVector],
    operator: LinearOp | None = None,
    basis_count: int = 17,
    f_max: int = 2,
    max_f_size: int = 3,
    tail_rule: TailRule | None = None,
    rank_tol: float = 1e-8,
    hyp_a_tol: float = 1e-10,
    off_f_tol: float = 1e-14,
) -> CriterionReport:
    """Check the three orbit hypotheses on a finite window of ``(z_n)``.

    Parameters
    ----------
    orbit : mapping int -> SeqVector
        ``z_n = A^n z_0`` for ``|n| <= Nrange``; for non-invertible ``A`` the
        negative indices are a caller-supplied backward sequence.
    operator : LinearOp, optional
        When given, ``A z_n = z_{n+1}`` is measured and reported.
    basis_count : int
        Hypothesis (a) approximates ``e_0 .. e_{J-1}`` from the orbit span.
    f_max, max_f_size : int
        Candidate sets ``F`` contain 0, lie in ``[-f_max, f_max]`` and have at
        most ``max_f_size`` elements; they are tried by size, then
        lexicographically.
    tail_rule : TailRule
        Certificate for the backward series in hypothesis (c).
    """
    if 0 not in orbit:
        raise ValidationError("orbit must contain z_0")
    n_range = min(max(orbit), -min(orbit)) if min(orbit) < 0 else 0
    if n_range < f_max + 1:
        raise WindowExhausted("orbit window too small for the requested F range")
    keys = sorted(orbit)
    vecs = [orbit[n] for n in keys]
    tag = vecs[0].tag
    lo, Z = _dense(vecs)  # rows z_n
    width = Z.shape[1]

    consistency = 0.0
    if operator is not None:
        for n in keys:
            if n + 1 in orbit:
                d = operator.apply(orbit[n]) - orbit[n + 1]
                consistency = max(consistency, norm(d))

    # (a) least-squares residual of e_j against the span of the orbit
    hypA = []
    row_norms = np.linalg.norm(Z, axis=1)
    G = Z[row_norms > 0] / row_norms[row_norms > 0, None]
    for j in range(basis_count):
        target = np.zeros(width, dtype=np.complex128)
        if lo <= j < lo + width:
            target[j - lo] = 1.0
            coef, *_ = np.linalg.lstsq(G.T, target, rcond=None)
            res = float(np.linalg.norm(G.T @ coef - target))
        else:
            res = 1.0
        hypA.append((j, res))
    a_pass = all(r <= hyp_a_tol for _, r in hypA)

    # (b) a functional annihilating z_n off F and non-zero on F
    index = {n: i for i, n in enumerate(keys)}
    best = None
    candidates = []
    others = [k for k in range(-f_max, f_max + 1) if k != 0]
    for size in range(1, max_f_size + 1):
        for rest in itertools.combinations(others, size - 1):
            candidates.append(tuple(sorted((0,) + rest)))
    tried = 0
    for F in candidates:
        tried += 1
        off = [index[n] for n in keys if n not in F and row_norms[index[n]] > 0]
        A_off = Z[off] / row_norms[off, None] if off else np.zeros((0, width))
        if A_off.shape[0]:
            _, s, vh = np.linalg.svd(A_off, full_matrices=True)
            rank = int(np.sum(s > rank_tol * s[0])) if len(s) and s[0] > 0 else 0
            null = vh[rank:].conj().T  # columns y with A_off @ y = 0 (bilinear pairing)
        else:
            null = np.eye(width, dtype=np.complex128)
        if null.shape[1] == 0:
            continue
        P = Z[[index[p] for p in F]] @ null  # pairings of null basis with z_p
        if np.any(np.linalg.norm(P, axis=1) == 0):
            continue
        rng = np.random.default_rng(0)
        trials = [np.conj(P[0])] + [np.conj((P / np.linalg.norm(P, axis=1, keepdims=True)).sum(axis=0))]
        trials += [rng.standard_normal(null.shape[1]) + 1j * rng.standard_normal(null.shape[1]) for _ in range(4)]
        for c in trials:
            y = null @ c
            pair = Z @ y
            on = np.abs(pair[[index[p] for p in F]])
            if np.min(on) <= rank_tol * np.linalg.norm(y) * np.max(row_norms):
                continue
            y = y / pair[index[0]]
            pair = Z @ y
            off_all = [abs(pair[index[n]]) for n in keys if n not in F]
            best = {
                "F": list(F),
                "functionalLo": lo,
                "functionalCoeffs": [[float(v.real), float(v.imag)] for v in y],
                "offFPairings": float(max(off_all, default=0.0)),
                "onFMin": float(np.min(np.abs(pair[[index[p] for p in F]]))),
                "candidatesTried": tried,
            }
            functional = SeqVector(tag, lo, y)
            break
        if best is not None:
            break
    if best is None:
        hypB = {"F": None, "candidatesTried": tried}
        functional = None
        b_verdict = "fail"
    else:
        hypB = best
        b_verdict = "pass" if best["onFMin"] > 0 and best["offFPairings"] <= off_f_tol else "fail"

    # (c) summability of the backward orbit (and of the forward one when invertible)
    rule = tail_rule or TailRule.none()
    back = np.array([norm(orbit[-n]) for n in range(0, n_range + 1)])
    fwd = np.array([norm(orbit[n]) for n in range(1, n_range + 1)])
    back_tail, back_why = _geometric_tail(back, rule)
    fwd_tail, fwd_why = _geometric_tail(fwd, rule)
    abs_sum = float(math.fsum(back) + math.fsum(fwd))
    tail = back_tail + fwd_tail
    if math.isfinite(tail):
        c_verdict = "pass"
    elif "divergence" in back_why or "divergence" in fwd_why:
        c_verdict = "fail"
    else:
        c_verdict = "inconclusive"
    hypC = {
        "absSum": abs_sum,
        "tailBound": tail,
        "backward": {"sum": float(math.fsum(back)), "tail": back_tail, "reason": back_why},
        "forward": {"sum": float(math.fsum(fwd)), "tail": fwd_tail, "reason": fwd_why},
    }
    verdicts = {"a": "pass" if a_pass else "fail", "b": b_verdict, "c": c_verdict}
    return CriterionReport(hypA, hypB, hypC, verdicts, consistency, functional)


# ---------------------------------------------------------------------------
# interleaved shifts


@dataclass(frozen=True)
class InterleavedSystem:
    K: int
    wk: tuple[float, ...]  # w_1 .. w_K
    wpk: tuple[float, ...]  # w'_0 .. w'_K
    nk: tuple[int, ...]  # n_0 = 0, n_1 .. n_K
    Ck: tuple[float, ...]  # C_0 .. C_K
    omega: dict[int, float]
    blockSums: tuple[float, ...]  # blocks 0 .. K-1
    totalSum: float
    exactSeries: float
    operatorBound: float

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "wk": list(self.wk),
            "wpk": list(self.wpk),
            "nk": list(self.nk),
            "Ck": list(self.Ck),
            "blockSums": list(self.blockSums),
            "totalSum": self.totalSum,
            "exactSeries": self.exactSeries,
            "operatorBound": self.operatorBound,
        }


def smallest_exponent_above(x: float) -> int:
    """Smallest integer ``n`` with ``2**n > x`` (``x > 0``)."""
    if not x > 0:
        raise ValidationError("argument must be positive")
    # x = m * 2**e with 0.5 <= m < 1, so 2**(e-1) <= x < 2**e
    return math.frexp(x)[1]


def _as_list(values: float | Sequence[float], count: int, name: str) -> list[float]:
    if np.isscalar(values):
        vals = [float(values)] * count
    else:
        vals = [float(v) for v in values]
        if len(vals) < count:
            raise ValidationError(f"{name} needs at least {count} entries, got {len(vals)}")
    if any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise ValidationError(f"{name} must be positive and finite")
    return vals


def schedule_lower_bounds(system: InterleavedSystem, k: int, n_prev: int | None = None) -> tuple[float, float]:
    """The two quantities ``2^{n_k}`` has to exceed."""
    n_prev = system.nk[k - 1] if n_prev is None else n_prev
    W = math.prod(system.wk[:k])
    Wp = math.prod(system.wpk[1 : k + 1])
    first = math.ldexp(1.0, n_prev + 2) / system.wk[k - 1]
    second = math.ldexp(system.Ck[k], 3 * k) / (W * Wp)
    return first, second


def build_interleaved(
    norms_y: float | Sequence[float],
    norms_ystar: float | Sequence[float],
    base_bound: float = 1.0,
    basis_constant: float = 1.0,
    K: int = 6,
    block_constants: Sequence[float] | None = None,
) -> InterleavedSystem:
    """Weights and block schedule of the interleaved shift.

    ``norms_y[k]`` and ``norms_ystar[k]`` are the norms of the interleaved
    vectors ``y_k`` and functionals ``y*_k`` (``k = 0 .. K+1``); scalars are
    broadcast.  The weights are ``w_k = 2^-k / |y*_k|`` and
    ``w'_k = 2^-k / |y_k|``; ``n_k`` is the smallest integer with
    ``2^{n_k} > max(2^{n_{k-1}+2} / w_k, 2^{3k} C_k / (w_1..w_k w'_1..w'_k))``.

    Block ``k`` spans the indices ``n_k + 1 .. n_{k+1}``.  Its share of
    ``sum ||u_n|| / |omega_1 ... omega_n|`` is bounded by
    ``C_k / (w_1..w_k w'_1..w'_k 2^{n_k - 2k}) (2 + 1/(2^{n_{k+1}-n_k-2} w_{k+1}))``,
    which the schedule keeps below ``3 * 2^-k``.  The exact partial series
    over the built weights is reported too (``exactSeries``).
    """
    if K < 1:
        raise ValidationError("K must be >= 1")
    if not (base_bound > 0 and basis_constant > 0):
        raise ValidationError("norm bounds must be positive")
    ny = _as_list(norms_y, K + 2, "norms_y")
    nys = _as_list(norms_ystar, K + 1, "norms_ystar")
    wk = [math.ldexp(1.0, -k) / nys[k] for k in range(1, K + 1)]
    wpk = [math.ldexp(1.0, -k) / ny[k] for k in range(0, K + 1)]
    if block_constants is not None:
        Ck = _as_list(block_constants, K + 1, "block_constants")
    else:
        # block k contains the basis vectors and y_{k+1} at its right end
        Ck = [max(base_bound, ny[k + 1]) for k in range(K + 1)]

    nk = [0]
    for k in range(1, K + 1):
        W = math.prod(wk[:k])
        Wp = math.prod(wpk[1 : k + 1])
        first = math.ldexp(1.0, nk[-1] + 2) / wk[k - 1]
        second = math.ldexp(Ck[k], 3 * k) / (W * Wp)
        n = max(smallest_exponent_above(max(first, second)), nk[-1] + 1)
        nk.append(n)

    block = []
    for k in range(K):
        W = math.prod(wk[:k])
        Wp = math.prod(wpk[1 : k + 1])
        lead = Ck[k] / (W * Wp * math.ldexp(1.0, nk[k] - 2 * k))
        block.append(lead * (2 + 1 / (math.ldexp(1.0, nk[k + 1] - nk[k] - 2) * wk[k])))
    total = float(math.fsum(block))

    # weights of the interleaved shift and the exact weighted series
    omega: dict[int, float] = {}
    for n in range(1, nk[-1] + 2):
        omega[n] = 2.0
    for k in range(K + 1):
        omega[nk[k] + 1] = wpk[k]
    for k in range(1, K + 1):
        omega[nk[k]] = wk[k - 1]
    norms_u = {n: base_bound for n in omega}
    for k in range(K + 1):
        norms_u[nk[k]] = ny[k]
    log_prod = 0.0
    terms = []
    for n in range(1, nk[-1] + 1):
        log_prod += math.log(omega[n])
        terms.append(norms_u[n] * math.exp(-log_prod))
    exact = float(math.fsum(terms))
    bound = base_bound * math.fsum(math.ldexp(1.0, -k) for k in range(1, K + 1))
    bound += 2 * basis_constant + base_bound * math.fsum(math.ldexp(1.0, -k) for k in range(0, K + 1))
    return InterleavedSystem(K, tuple(wk), tuple(wpk), tuple(nk), tuple(Ck), omega, tuple(block), total, exact, bound)


def interleaved_shift(system: InterleavedSystem) -> WeightedShift:
    """The weighted shift with weights ``omega_1 .. omega_{n_K + 1}`` in the ``u_n`` coordinates."""
    n_max = max(system.omega)
    return WeightedShift.unilateral([system.omega[n] for n in range(1, n_max + 1)])


def mixing_necessity_probe(S: WeightedShift, n: int) -> float:
    """Smallest sup norm of an ``x`` with ``|B^n x - e_0|_inf < 1/2``: ``1/(2|w_1...w_n|)``.

    Only the coordinate ``x_n`` reaches ``e_0`` after ``n`` steps, with factor
    ``w_1...w_n``, so ``|x_n w_1...w_n - 1| < 1/2`` forces
    ``|x_n| > 1/(2|w_1...w_n|)`` and values just above the infimum work.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    return 1.0 / (2.0 * abs(S.product(n)))
