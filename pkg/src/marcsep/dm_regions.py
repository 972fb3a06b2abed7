"""Source-channel rate regions for the discrete memoryless MARC / MABRC.

Every region is a set of constraints ``H < kappa * I`` (achievable) or
``H <= kappa * I`` (necessary). A :class:`RegionReport` keeps the entropy
and rate of each constraint and exposes the smallest admissible source-channel
rate ``kappa_star``.

Constraint keys are shared across the package:

========== ================== =======================================
key        entropy            rate (irregular DF scheme)
========== ================== =======================================
relay_s1   H(S1|S2,W3)        I(X1;Y3|X2,V1,X3)
relay_s2   H(S2|S1,W3)        I(X2;Y3|X1,V2,X3)
relay_s1s2 H(S1,S2|W3)        I(X1,X2;Y3|V1,V2,X3)
dest_s1    H(S1|S2,W)         I(X1,X3;Y|X2,V2)
dest_s2    H(S2|S1,W)         I(X2,X3;Y|X1,V1)
dest_s1s2  H(S1,S2|W)         I(X1,X2,X3;Y)
========== ================== =======================================
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .probability import (
    DmChannel,
    FactoredInputDist,
    JointSourceDist,
    ValidationError,
    _check_pmf,
    cond_mi_table,
    conditional_entropy,
    induced_joint,
)

__all__ = [
    "RELAY_KEYS",
    "DEST_KEYS",
    "ALL_KEYS",
    "EntropyVector",
    "RateVector",
    "RegionReport",
    "ConverseSearchResult",
    "kappa_bound",
    "entropy_vector",
    "irregular_rates",
    "evaluate_irregular",
    "evaluate_converse_marc",
    "evaluate_converse_mabrc",
    "regular_encoding_region",
    "maximize_converse",
    "search_irregular",
]

RELAY_KEYS = ("relay_s1", "relay_s2", "relay_s1s2")
DEST_KEYS = ("dest_s1", "dest_s2", "dest_s1s2")
ALL_KEYS = RELAY_KEYS + DEST_KEYS

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class EntropyVector:
    """Left-hand sides of the six relay/destination constraints (bits)."""

    relay_s1: float
    relay_s2: float
    relay_s1s2: float
    dest_s1: float
    dest_s2: float
    dest_s1s2: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v >= -ZERO_TOL:
                raise ValidationError(f"{f.name} = {v} is negative")

    @property
    def relay(self) -> tuple[float, float, float]:
        return (self.relay_s1, self.relay_s2, self.relay_s1s2)

    @property
    def dest(self) -> tuple[float, float, float]:
        return (self.dest_s1, self.dest_s2, self.dest_s1s2)

    def as_dict(self) -> dict[str, float]:
        return {k: float(getattr(self, k)) for k in ALL_KEYS}


@dataclass(frozen=True)
class RateVector(EntropyVector):
    """Right-hand side mutual informations (bits per channel use)."""


def kappa_bound(h: float, i: float) -> float:
    """Smallest kappa with ``h <= kappa * i``; 0 for a vacuous constraint
    and +inf when the rate is zero but the entropy is not."""
    if h <= ZERO_TOL:
        return 0.0
    if i <= ZERO_TOL:
        return math.inf
    return h / i


@dataclass(frozen=True)
class RegionReport:
    """Per-constraint entropies and rates with the implied kappa bounds.

    ``necessary`` marks converse reports (non-strict inequalities).
    """

    entropies: dict[str, float]
    rates: dict[str, float]
    necessary: bool = False
    scheme: str = "irregular"
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.entropies) != set(self.rates):
            raise ValueError("entropies and rates must cover the same constraints")

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(k for k in ALL_KEYS if k in self.rates) + tuple(
            k for k in self.rates if k not in ALL_KEYS
        )

    @property
    def bounds(self) -> dict[str, float]:
        return {k: kappa_bound(self.entropies[k], self.rates[k]) for k in self.keys}

    @property
    def kappa_star(self) -> float:
        b = self.bounds
        return max(b.values()) if b else 0.0

    @property
    def binding(self) -> str | None:
        """Key of the constraint attaining ``kappa_star`` (None if all vacuous)."""
        b = self.bounds
        if not b or max(b.values()) == 0.0:
            return None
        return max(b, key=b.get)

    @property
    def vacuous(self) -> tuple[str, ...]:
        return tuple(k for k in self.keys if self.entropies[k] <= ZERO_TOL)

    def feasible(self, kappa: float, margin: float = 1e-9) -> bool:
        """Achievable reports need ``kappa > kappa_star + margin``; necessary
        reports accept ``kappa >= kappa_star - margin``."""
        if margin < 0:
            raise ValueError("margin must be nonnegative")
        k = self.kappa_star
        if self.necessary:
            return kappa >= k - margin
        return kappa > k + margin

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "necessary": self.necessary,
            "entropies": {k: self.entropies[k] for k in self.keys},
            "rates": {k: self.rates[k] for k in self.keys},
            "bounds": _json_floats(self.bounds),
            "kappa_star": _json_float(self.kappa_star),
            "binding": self.binding,
            "vacuous": list(self.vacuous),
            **({"notes": self.notes} if self.notes else {}),
        }

    def csv_row(self) -> dict[str, float]:
        """Flat row: ``H_<key>``, ``I_<key>``, ``kappa_<key>`` per constraint."""
        row: dict[str, float] = {}
        for k in self.keys:
            row[f"H_{k}"] = self.entropies[k]
            row[f"I_{k}"] = self.rates[k]
            row[f"kappa_{k}"] = self.bounds[k]
        row["kappa_star"] = self.kappa_star
        return row


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _json_floats(d):
    return {k: _json_float(v) for k, v in d.items()}


def entropy_vector(sources: JointSourceDist) -> EntropyVector:
    """The six conditional entropies appearing on the left of the region."""
    h = conditional_entropy
    return EntropyVector(
        relay_s1=h(sources, ["S1"], ["S2", "W3"]),
        relay_s2=h(sources, ["S2"], ["S1", "W3"]),
        relay_s1s2=h(sources, ["S1", "S2"], ["W3"]),
        dest_s1=h(sources, ["S1"], ["S2", "W"]),
        dest_s2=h(sources, ["S2"], ["S1", "W"]),
        dest_s1s2=h(sources, ["S1", "S2"], ["W"]),
    )


# Axis layout of the induced joint: V1 V2 X1 X2 X3 Y Y3
_V1, _V2, _X1, _X2, _X3, _Y, _Y3 = range(7)

_IRREGULAR_TERMS = {
    "relay_s1": ((_X1,), (_Y3,), (_X2, _V1, _X3)),
    "relay_s2": ((_X2,), (_Y3,), (_X1, _V2, _X3)),
    "relay_s1s2": ((_X1, _X2), (_Y3,), (_V1, _V2, _X3)),
    "dest_s1": ((_X1, _X3), (_Y,), (_X2, _V2)),
    "dest_s2": ((_X2, _X3), (_Y,), (_X1, _V1)),
    "dest_s1s2": ((_X1, _X2, _X3), (_Y,), ()),
}

# Axis layout for converse terms: X1 X2 X3 Y Y3
_CONVERSE_TERMS = {
    "relay_s1": ((0,), (4,), (1, 2)),
    "relay_s2": ((1,), (4,), (0, 2)),
    "relay_s1s2": ((0, 1), (4,), (2,)),
    "dest_s1": ((0, 2), (3,), (1,)),
    "dest_s2": ((1, 2), (3,), (0,)),
    "dest_s1s2": ((0, 1, 2), (3,), ()),
}


def _check_sources_channel(sources, channel):
    if not isinstance(sources, JointSourceDist):
        raise TypeError("sources must be a JointSourceDist")
    if not isinstance(channel, DmChannel):
        raise TypeError("channel must be a DmChannel")


def irregular_rates(channel: DmChannel, inputs: FactoredInputDist) -> RateVector:
    """Right-hand side mutual informations of the irregular DF region."""
    joint = induced_joint(channel, inputs)
    if joint.table.sum() <= 0:
        raise ValidationError("induced joint has zero mass")
    vals = {k: max(float(cond_mi_table(joint.table, *t)), 0.0) for k, t in _IRREGULAR_TERMS.items()}
    return RateVector(**vals)


def evaluate_irregular(
    sources: JointSourceDist, channel: DmChannel, inputs: FactoredInputDist
) -> RegionReport:
    """Achievable region of the irregular-encoding DF separation scheme.

    Relay constraints use entropies conditioned on W3 and destination
    constraints on W. A relay constraint with positive entropy and zero
    rate makes ``kappa_star`` infinite: decode-and-forward needs the relay
    to decode.
    """
    _check_sources_channel(sources, channel)
    ent = entropy_vector(sources).as_dict()
    rates = irregular_rates(channel, inputs).as_dict()
    return RegionReport(ent, rates, necessary=False, scheme="irregular")


def _input_joint(channel: DmChannel, input_pmf) -> np.ndarray:
    q = np.asarray(input_pmf, dtype=float)
    if q.shape != tuple(channel.input_shape):
        raise ValidationError(f"input pmf shape {q.shape} != channel inputs {channel.input_shape}")
    _check_pmf(q, "input pmf")
    return q[..., None, None] * channel.kernel


def _converse_rates(channel: DmChannel, input_pmf, keys) -> dict[str, float]:
    joint = _input_joint(channel, input_pmf)
    return {k: max(float(cond_mi_table(joint, *_CONVERSE_TERMS[k])), 0.0) for k in keys}


def evaluate_converse_marc(
    sources: JointSourceDist, channel: DmChannel, input_pmf
) -> RegionReport:
    """Necessary destination constraints for one input law p(x1, x2, x3).

    The converse only requires the constraints to hold for *some* input law;
    :func:`maximize_converse` takes the minimum over laws.
    """
    _check_sources_channel(sources, channel)
    ent = entropy_vector(sources).as_dict()
    rates = _converse_rates(channel, input_pmf, DEST_KEYS)
    return RegionReport({k: ent[k] for k in DEST_KEYS}, rates, necessary=True, scheme="converse-marc")


def evaluate_converse_mabrc(
    sources: JointSourceDist, channel: DmChannel, input_pmf
) -> RegionReport:
    """MARC necessary constraints plus the three relay-decoding ones."""
    _check_sources_channel(sources, channel)
    ent = entropy_vector(sources).as_dict()
    rates = _converse_rates(channel, input_pmf, ALL_KEYS)
    return RegionReport(ent, rates, necessary=True, scheme="converse-mabrc")


def regular_encoding_region(
    sources: JointSourceDist,
    channel: DmChannel,
    inputs: FactoredInputDist,
    scenario: str = "mabrc",
) -> RegionReport:
    """Region when relay and source codebooks share one size.

    MABRC: each relay/destination pair merges into
    ``max(H_relay, H_dest) < kappa * min(I_relay, I_dest)``.
    MARC: a single Slepian-Wolf code, so only destination entropies appear,
    ``H_dest < kappa * min(I_relay, I_dest)``.
    """
    scenario = scenario.lower()
    if scenario not in ("marc", "mabrc"):
        raise ValueError(f"scenario must be 'marc' or 'mabrc', got {scenario!r}")
    _check_sources_channel(sources, channel)
    ent = entropy_vector(sources)
    rates = irregular_rates(channel, inputs)
    names = ("s1", "s2", "s1s2")
    merged_h, merged_i = {}, {}
    for n, hr, hd, ir, id_ in zip(names, ent.relay, ent.dest, rates.relay, rates.dest):
        key = f"merged_{n}"
        merged_h[key] = max(hr, hd) if scenario == "mabrc" else hd
        merged_i[key] = min(ir, id_)
    return RegionReport(merged_h, merged_i, necessary=False, scheme=f"regular-{scenario}")


# ---------------------------------------------------------------------------
# multi-start search


@dataclass(frozen=True)
class ConverseSearchResult:
    input_pmf: np.ndarray
    kappa: float
    report: RegionReport
    trace: list = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "kappa": _json_float(self.kappa),
            "input_pmf": self.input_pmf.tolist(),
            "report": self.report.to_dict(),
            "evaluations": len(self.trace),
        }


def _simplex_grid(k: int, steps: int) -> np.ndarray:
    """All points of the k-simplex with coordinates in multiples of 1/steps."""
    from itertools import combinations

    pts = []
    for bars in combinations(range(steps + k - 1), k - 1):
        prev, row = -1, []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(steps + k - 2 - prev)
        pts.append(row)
    return np.asarray(pts, dtype=float) / steps


def _product_grid(shape, steps: int, limit: int = 20000) -> np.ndarray | None:
    grids = [_simplex_grid(n, steps) for n in shape]
    total = int(np.prod([len(g) for g in grids]))
    if total > limit:
        return None
    g1, g2, g3 = grids
    return np.einsum("ai,bj,ck->abcijk", g1, g2, g3).reshape(-1, *shape)


def _cond_mi_grad(joint: np.ndarray, a, b, c) -> np.ndarray:
    """d I(A;B|C) / d joint[cell] in bits, same shape as ``joint``.

    From I = H(AC) + H(BC) - H(ABC) - H(C); the constant terms of the four
    entropy derivatives cancel, leaving log-marginal ratios.
    """
    nd = joint.ndim

    def log_marg(keep):
        drop = tuple(i for i in range(nd) if i not in keep)
        m = joint.sum(axis=drop, keepdims=True) if drop else joint
        return np.log2(np.maximum(m, 1e-300))

    a, b, c = tuple(a), tuple(b), tuple(c)
    return log_marg(a + b + c) + log_marg(c) - log_marg(a + c) - log_marg(b + c)


def _epigraph_solve(
    rates_fn: Callable[[np.ndarray], np.ndarray],
    entropies: np.ndarray,
    blocks: Sequence[tuple[int, int]],
    x0: np.ndarray,
    maxiter: int,
    rates_jac: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Maximise t subject to rates_j(x) >= t * H_j, x on a product of simplices.

    ``blocks`` lists (start, stop) index ranges that must each sum to one.
    ``rates_jac(x)`` (optional) returns d rates_j / d x_i with shape (J, n).
    """
    n = x0.size

    def obj(z):
        return -z[-1]

    def obj_grad(z):
        g = np.zeros_like(z)
        g[-1] = -1.0
        return g

    def ineq(z):
        return rates_fn(np.clip(z[:n], 0.0, 1.0)) - z[-1] * entropies

    cons = [{"type": "ineq", "fun": ineq}]
    if rates_jac is not None:
        cons[0]["jac"] = lambda z: np.hstack(
            [rates_jac(np.clip(z[:n], 0.0, 1.0)), -entropies[:, None]]
        )
    for a, b in blocks:
        ind = np.zeros(n + 1)
        ind[a:b] = 1.0
        cons.append({
            "type": "eq",
            "fun": (lambda z, a=a, b=b: z[a:b].sum() - 1.0),
            "jac": (lambda z, ind=ind: ind),
        })
    t0 = float(np.min(rates_fn(x0) / entropies))
    z0 = np.append(x0, max(t0, 0.0))
    bounds = [(0.0, 1.0)] * n + [(0.0, None)]
    res = minimize(
        obj, z0, jac=obj_grad, method="SLSQP", bounds=bounds, constraints=cons,
        options={"maxiter": maxiter, "ftol": 1e-12},
    )
    x = np.clip(res.x[:n], 0.0, None)
    for a, b in blocks:
        s = x[a:b].sum()
        x[a:b] = x[a:b] / s if s > 0 else 1.0 / (b - a)
    return x


def maximize_converse(
    sources: JointSourceDist,
    channel: DmChannel,
    budget: int = 64,
    seed: int = 0,
    scenario: str = "marc",
    grid_steps: int = 4,
    maxiter: int = 200,
    workers: int = 1,
) -> ConverseSearchResult:
    """Minimise the necessary kappa bound over input laws p(x1, x2, x3).

    A coarse grid pass over product-form inputs seeds the search; ``budget``
    restarts (the best grid points first, then Dirichlet draws) are refined
    with SLSQP on the epigraph form ``max t s.t. I_j >= t H_j``. The returned
    value is the minimum over every evaluated law, so it never exceeds any
    visited point and is a valid upper estimate of the true bound.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if max(channel.input_shape) > 8:
        raise ValidationError("maximize_converse supports input alphabets of at most 8 symbols")
    scenario = scenario.lower()
    keys = {"marc": DEST_KEYS, "mabrc": ALL_KEYS}.get(scenario)
    if keys is None:
        raise ValueError(f"scenario must be 'marc' or 'mabrc', got {scenario!r}")
    _check_sources_channel(sources, channel)
    evaluate = evaluate_converse_marc if scenario == "marc" else evaluate_converse_mabrc
    shape = tuple(channel.input_shape)
    ent_all = entropy_vector(sources).as_dict()
    ent = np.array([ent_all[k] for k in keys])
    active = ent > ZERO_TOL
    kernel = channel.kernel
    terms = [_CONVERSE_TERMS[k] for k, a in zip(keys, active) if a]

    def batch_rates(Q):
        J = Q[..., None, None] * kernel
        return np.stack([cond_mi_table(J, *t, batch=1) for t in terms], axis=-1)

    def batch_kappa(Q):
        if not terms:
            return np.zeros(len(Q))
        r = batch_rates(Q)
        with np.errstate(divide="ignore"):
            b = np.where(r > ZERO_TOL, ent[active] / np.maximum(r, ZERO_TOL), np.inf)
        return b.max(axis=-1)

    trace: list[tuple[str, float]] = []
    uniform = np.full(shape, 1.0 / np.prod(shape))
    cand = [uniform[None]]
    grid = _product_grid(shape, grid_steps)
    if grid is not None:
        cand.append(grid)
    pool = np.concatenate(cand)
    pool_kappa = batch_kappa(pool)
    trace.extend(("grid", float(k)) for k in pool_kappa)
    best_i = int(np.argmin(pool_kappa))
    best_q, best_k = pool[best_i], float(pool_kappa[best_i])

    if terms and best_k > 0:
        order = np.argsort(pool_kappa, kind="stable")
        n_grid_starts = min(len(order), max(1, budget // 4))
        seeds = np.random.SeedSequence(seed).spawn(budget)
        starts = []
        for r in range(budget):
            if r < n_grid_starts:
                starts.append(pool[order[r]].ravel())
            else:
                rng = np.random.default_rng(seeds[r])
                starts.append(rng.dirichlet(np.ones(uniform.size)))

        rates_flat = lambda x: batch_rates(x.reshape((1,) + shape))[0]
        ent_act = ent[active]

        def rates_jac(x):
            J = x.reshape(shape)[..., None, None] * kernel
            return np.stack([
                (_cond_mi_grad(J, *t) * kernel).sum(axis=(3, 4)).ravel() for t in terms
            ])

        def run(x0):
            x = _epigraph_solve(rates_flat, ent_act, [(0, x0.size)], x0, maxiter, rates_jac)
            q = x.reshape(shape)
            return q, float(batch_kappa(q[None])[0])

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                results = list(ex.map(run, starts))
        else:
            results = [run(x0) for x0 in starts]
        for r, (q, k) in enumerate(results):
            trace.append((f"restart{r}", k))
            if k < best_k:
                best_q, best_k = q, k

    report = evaluate(sources, channel, best_q)
    return ConverseSearchResult(np.array(best_q), report.kappa_star, report, trace)


def _unpack_factored(x, k1, n1, k2, n2, n3) -> FactoredInputDist:
    i = 0
    parts = []
    for shape in ((k1,), (k1, n1), (k2,), (k2, n2), (k1, k2, n3)):
        size = int(np.prod(shape))
        parts.append(x[i:i + size].reshape(shape))
        i += size
    # Renormalise each conditional row exactly.
    v1, x1, v2, x2, x3 = (p / p.sum(axis=-1, keepdims=True) for p in parts)
    return FactoredInputDist(v1, x1, v2, x2, x3)


def search_irregular(
    sources: JointSourceDist,
    channel: DmChannel,
    aux_shape: tuple[int, int] | None = None,
    budget: int = 16,
    seed: int = 0,
    maxiter: int = 200,
) -> tuple[FactoredInputDist, RegionReport]:
    """Heuristic minimisation of the achievable kappa_star over factored inputs.

    Same multi-start epigraph search as :func:`maximize_converse`; no
    optimality claim.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    _check_sources_channel(sources, channel)
    n1, n2, n3 = channel.input_shape
    k1, k2 = aux_shape if aux_shape is not None else (n1, n2)
    shapes = ((k1,), (k1, n1), (k2,), (k2, n2), (k1, k2, n3))
    blocks, i = [], 0
    for shape in shapes:
        row = shape[-1]
        for _ in range(int(np.prod(shape[:-1]))):
            blocks.append((i, i + row))
            i += row
    ent = entropy_vector(sources).as_dict()
    ent_arr = np.array([ent[k] for k in ALL_KEYS])
    active = ent_arr > ZERO_TOL

    def rates_of(x):
        fi = _unpack_factored(np.clip(x, 1e-300, None), k1, n1, k2, n2, n3)
        r = irregular_rates(channel, fi).as_dict()
        return np.array([r[k] for k in ALL_KEYS])

    best = FactoredInputDist.uniform((n1, n2, n3), (k1, k2))
    best_report = evaluate_irregular(sources, channel, best)
    if not active.any():
        return best, best_report
    seeds = np.random.SeedSequence(seed).spawn(budget)
    for r in range(budget):
        rng = np.random.default_rng(seeds[r])
        x0 = np.concatenate([rng.dirichlet(np.ones(b - a)) for a, b in blocks])
        x = _epigraph_solve(lambda z: rates_of(z)[active], ent_arr[active], blocks, x0, maxiter)
        fi = _unpack_factored(np.clip(x, 0.0, None) + 0.0, k1, n1, k2, n2, n3)
        rep = evaluate_irregular(sources, channel, fi)
        if rep.kappa_star < best_report.kappa_star:
            best, best_report = fi, rep
    return best, best_report
