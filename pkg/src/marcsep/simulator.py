"""Block simulation of the Slepian-Wolf / decode-and-forward separation scheme.

Channel codes are abstracted as rate-gated index pipes: the only thing that
crosses the channel is a pair of bin indices per block. Per trial:

1. draw ``B`` i.i.d. length-``m`` blocks of (S1, S2, W, W3);
2. bin every source block twice, with independent relay bins ``f_i^r`` and
   destination bins ``f_i^d`` (one shared binning when ``regular``);
3. in channel block ``b`` the relay receives ``f_i^r(s_{i,b})`` and decodes
   ``s_b`` from them and ``w3_b``; in block ``b + 1`` the destination
   receives ``f_i^d`` of the relay's estimate;
4. the destination decodes backwards, block ``B`` first, from the
   destination indices and ``w_b``.

A decoder outcome with zero or several admissible candidates is a block error.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .dm_regions import entropy_vector
from .probability import JointSourceDist

__all__ = [
    "CapExceededError",
    "BinningCode",
    "LinkModel",
    "SchemeConfig",
    "TrialReport",
    "SweepResult",
    "ComparisonReport",
    "block_schedule",
    "corner_rates",
    "decode_pair",
    "run_scheme",
    "threshold_sweep",
    "verify_regular_vs_irregular",
]

SEARCH_CAP_BITS = 24
_PAIR_CHUNK = 1 << 20
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


class CapExceededError(ValueError):
    """Exhaustive decoding would exceed the desk-scale search cap."""


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@lru_cache(maxsize=16)
def _all_sequences(k: int, m: int) -> np.ndarray:
    """Every length-``m`` sequence over ``range(k)``, row ``i`` is index ``i``
    in base ``k`` (most significant symbol first)."""
    idx = np.arange(k**m, dtype=np.int64)
    powers = k ** np.arange(m - 1, -1, -1, dtype=np.int64)
    seqs = (idx[:, None] // powers) % k
    seqs.setflags(write=False)
    return seqs


def _seq_index(seq: np.ndarray, k: int) -> int:
    out = 0
    for s in np.asarray(seq).ravel():
        out = out * k + int(s)
    return out


class BinningCode:
    """Uniform random binning of length-``m`` sequences into ``2^(mR)`` bins.

    The bin of a sequence is a seeded 64-bit mixing hash of its index reduced
    modulo the bin count, so the assignment is reproducible and needs no table.
    """

    def __init__(self, m: int, rate: float, seed: int, alphabet_size: int = 2):
        if m < 1:
            raise ValueError("m must be positive")
        if rate < 0:
            raise ValueError("rate must be nonnegative")
        self.m = int(m)
        self.rate = float(rate)
        self.seed = int(seed)
        self.alphabet_size = int(alphabet_size)
        self.n_bins = max(1, int(math.floor(2.0 ** (self.m * self.rate) + 1e-9)))
        self._key = _splitmix64(np.array([self.seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        self._table: np.ndarray | None = None

    def assign(self, indices) -> np.ndarray:
        x = np.asarray(indices, dtype=np.uint64)
        with np.errstate(over="ignore"):
            h = _splitmix64(_splitmix64(x ^ self._key))
        return (h % np.uint64(self.n_bins)).astype(np.int64)

    def bin_of(self, seq) -> int:
        return int(self.assign([_seq_index(seq, self.alphabet_size)])[0])

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            self._table = self.assign(np.arange(self.alphabet_size**self.m, dtype=np.uint64))
        return self._table

    def members(self, u: int | None) -> np.ndarray:
        """Indices of sequences in bin ``u`` (all sequences when ``u`` is None)."""
        if u is None:
            return np.arange(self.alphabet_size**self.m)
        return np.flatnonzero(self.table == u)


@dataclass(frozen=True)
class LinkModel:
    """How bin indices cross the channel.

    ``ideal`` delivers exactly. ``erasure`` drops each index with probability
    ``erasure_prob``; the decoder then searches without that bin constraint.
    ``capacity`` delivers a group (relay or destination) iff its rates satisfy
    ``R <= kappa * C`` for the three constraints of the group, else every
    index of the group is replaced by a uniformly random one. ``capacities``
    follows the order relay_s1, relay_s2, relay_s1s2, dest_s1, dest_s2,
    dest_s1s2.
    """

    kind: str = "ideal"
    erasure_prob: float = 0.0
    capacities: tuple[float, ...] | None = None
    kappa: float | None = None

    def __post_init__(self):
        if self.kind not in ("ideal", "erasure", "capacity"):
            raise ValueError(f"unknown link model {self.kind!r}")
        if not 0.0 <= self.erasure_prob <= 1.0:
            raise ValueError("erasure_prob must lie in [0, 1]")
        if self.kind == "capacity":
            if self.capacities is None or len(self.capacities) != 6 or self.kappa is None:
                raise ValueError("capacity links need six capacities and kappa")
            if self.kappa < 0 or any(c < 0 for c in self.capacities):
                raise ValueError("capacities and kappa must be nonnegative")
            object.__setattr__(self, "capacities", tuple(float(c) for c in self.capacities))

    def group_ok(self, group: str, rates: tuple[float, float]) -> bool:
        if self.kind != "capacity":
            return True
        c = self.capacities[:3] if group == "relay" else self.capacities[3:]
        r1, r2 = rates
        k = self.kappa
        return r1 <= k * c[0] and r2 <= k * c[1] and r1 + r2 <= k * c[2]


@dataclass(frozen=True)
class SchemeConfig:
    sources: JointSourceDist
    m: int
    relay_rates: tuple[float, float]
    dest_rates: tuple[float, float]
    B: int = 1
    epsilon: float = 0.05
    link: LinkModel = field(default_factory=LinkModel)
    decoder: str = "typical"
    regular: bool = False
    scenario: str = "marc"

    def __post_init__(self):
        if self.m < 1 or self.B < 1:
            raise ValueError("m and B must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        rr = tuple(float(r) for r in self.relay_rates)
        dr = tuple(float(r) for r in self.dest_rates)
        if len(rr) != 2 or len(dr) != 2 or min(rr + dr) < 0:
            raise ValueError("rates must be two nonnegative numbers per link")
        if self.regular and rr != dr:
            raise ValueError("regular encoding ties relay and destination rates")
        if self.decoder not in ("typical", "map"):
            raise ValueError("decoder must be 'typical' or 'map'")
        if self.scenario not in ("marc", "mabrc"):
            raise ValueError("scenario must be 'marc' or 'mabrc'")
        object.__setattr__(self, "relay_rates", rr)
        object.__setattr__(self, "dest_rates", dr)

    @property
    def search_bits(self) -> float:
        k1, k2 = self.sources.table.shape[:2]
        return self.m * math.log2(k1 * k2)

    def check_cap(self) -> None:
        if self.search_bits > SEARCH_CAP_BITS + 1e-9:
            raise CapExceededError(
                f"m * log2|S1 x S2| = {self.search_bits:.2f} exceeds the cap of {SEARCH_CAP_BITS}"
            )

    def margins(self) -> dict[str, float]:
        """Rate minus entropy for every Slepian-Wolf constraint (bits/symbol)."""
        h = entropy_vector(self.sources)
        (r1, r2), (d1, d2) = self.relay_rates, self.dest_rates
        return {
            "relay_s1": r1 - h.relay_s1,
            "relay_s2": r2 - h.relay_s2,
            "relay_s1s2": r1 + r2 - h.relay_s1s2,
            "dest_s1": d1 - h.dest_s1,
            "dest_s2": d2 - h.dest_s2,
            "dest_s1s2": d1 + d2 - h.dest_s1s2,
        }


@dataclass(frozen=True)
class TrialReport:
    relay_error_rate: float
    destination_error_rate: float
    system_error_rate: float
    relay_errors: int
    destination_errors: int
    system_errors: int
    destination_ambiguous: int
    blocks: int
    trials: int
    seed: int
    margins: dict

    def to_dict(self) -> dict:
        return asdict(self)


def block_schedule(B: int) -> list[dict]:
    """Which source block's indices travel in each of the ``B + 1`` channel blocks.

    Channel block ``b`` carries relay bins of source block ``b`` and
    destination bins of source block ``b - 1`` (None at the ends).
    """
    if B < 1:
        raise ValueError("B must be positive")
    return [
        {
            "channel_block": b,
            "relay_bins_of": b if b <= B else None,
            "dest_bins_of": b - 1 if b >= 2 else None,
        }
        for b in range(1, B + 2)
    ]


def corner_rates(h1: float, h2: float, hj: float, margin: float) -> tuple[float, float]:
    """Corner point of a Slepian-Wolf region shifted outward by ``margin``:
    ``R1 = H(S1|S2) + margin``, ``R2 = max(H(S2|S1), H(S1,S2) - H(S1|S2)) + margin``."""
    r1 = max(h1 + margin, 0.0)
    r2 = max(max(h2, hj - h1) + margin, 0.0)
    return r1, r2


def _indicators(seqs: np.ndarray, k: int) -> np.ndarray:
    """(k, n, m) float one-hot view of integer sequences."""
    return (seqs[None, :, :] == np.arange(k)[:, None, None]).astype(np.float64)


def _prefilter(seqs, side, pmf2, tol, typical: bool) -> np.ndarray:
    """Keep sequences whose pairing with ``side`` is admissible under the
    two-variable marginal ``pmf2`` (axes: sequence symbol, side symbol)."""
    if len(seqs) == 0:
        return seqs
    ka, kc = pmf2.shape
    m = seqs.shape[1]
    flat = seqs * kc + side[None, :]
    counts = np.stack([(flat == j).sum(axis=1) for j in range(ka * kc)], axis=1)
    p = pmf2.ravel()
    ok = ~np.any((counts > 0) & (p <= 0), axis=1)
    if typical:
        ok &= np.all(np.abs(counts / m - p) <= tol + 1e-12, axis=1)
    return seqs[ok]


def decode_pair(cands1, cands2, side, pmf3, epsilon: float, method: str = "typical"):
    """Find the unique admissible pair among the candidate sequences.

    ``pmf3`` has axes (S1, S2, side). ``typical`` keeps pairs strongly
    typical with ``side``; ``map`` keeps the most likely pair. Returns
    ``(s1, s2, n_admissible)``; ``s1`` and ``s2`` are None unless exactly
    one pair is admissible.
    """
    pmf3 = np.asarray(pmf3, dtype=float)
    k1, k2, kc = pmf3.shape
    side = np.asarray(side, dtype=np.int64)
    m = side.size
    typical = method == "typical"
    c1 = _prefilter(np.asarray(cands1), side, pmf3.sum(axis=1), k2 * epsilon, typical)
    c2 = _prefilter(np.asarray(cands2), side, pmf3.sum(axis=0), k1 * epsilon, typical)
    if len(c1) == 0 or len(c2) == 0:
        return None, None, 0
    ind1 = _indicators(c1, k1)
    ind2 = _indicators(c2, k2)
    masks = [side == c for c in range(kc)]
    logp = np.where(pmf3 > 0, np.log(np.where(pmf3 > 0, pmf3, 1.0)), -np.inf)
    rows = max(1, _PAIR_CHUNK // max(1, len(c2)))

    found = 0
    best = (None, None)
    best_ll = -np.inf
    n_best = 0
    for start in range(0, len(c1), rows):
        sl = slice(start, start + rows)
        ok = np.ones((len(ind1[0][sl]), len(c2)), dtype=bool)
        ll = np.zeros(ok.shape)
        for c in range(kc):
            mc = masks[c]
            if not mc.any():
                continue
            for a in range(k1):
                left = ind1[a][sl][:, mc]
                for b in range(k2):
                    cnt = left @ ind2[b][:, mc].T
                    p = pmf3[a, b, c]
                    if p <= 0:
                        ok &= cnt == 0
                    else:
                        if typical:
                            ok &= np.abs(cnt / m - p) <= epsilon + 1e-12
                        ll += cnt * logp[a, b, c]
        if typical:
            hits = np.argwhere(ok)
            found += len(hits)
            if found > 1:
                return None, None, found
            if len(hits) == 1:
                i, j = hits[0]
                best = (c1[start + i], c2[j])
        else:
            ll = np.where(ok, ll, -np.inf)
            top = ll.max()
            if not np.isfinite(top):
                continue
            if top > best_ll + 1e-9:
                ties = np.argwhere(ll >= top - 1e-9)
                best_ll, n_best = top, len(ties)
                i, j = ties[0]
                best = (c1[start + i], c2[j])
            elif top >= best_ll - 1e-9:
                n_best += int((ll >= best_ll - 1e-9).sum())
    if typical:
        return (best if found == 1 else (None, None)) + (found,)
    if n_best != 1:
        return None, None, n_best
    return best + (1,)


def _deliver(link: LinkModel, group: str, rates, indices, n_bins, rng):
    if not link.group_ok(group, rates):
        return [int(rng.integers(n)) for n in n_bins]
    if link.kind == "erasure":
        return [None if rng.random() < link.erasure_prob else u for u in indices]
    return list(indices)


def _run_trial(cfg: SchemeConfig, seed: int, trial: int):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))
    k1, k2, kw, kw3 = cfg.sources.table.shape
    m, B = cfg.m, cfg.B
    code_seeds = rng.integers(0, 2**63, size=4)
    f_r = (
        BinningCode(m, cfg.relay_rates[0], int(code_seeds[0]), k1),
        BinningCode(m, cfg.relay_rates[1], int(code_seeds[1]), k2),
    )
    f_d = f_r if cfg.regular else (
        BinningCode(m, cfg.dest_rates[0], int(code_seeds[2]), k1),
        BinningCode(m, cfg.dest_rates[1], int(code_seeds[3]), k2),
    )
    p = cfg.sources.table
    flat = rng.choice(p.size, size=(B, m), p=p.ravel())
    s1, s2, w, w3 = np.unravel_index(flat, p.shape)
    pmf_relay = p.sum(axis=2)  # (S1, S2, W3)
    pmf_dest = p.sum(axis=3)   # (S1, S2, W)
    seq1, seq2 = _all_sequences(k1, m), _all_sequences(k2, m)

    relay_ok = np.zeros(B, dtype=bool)
    dest_idx: list = [None] * B
    for b in range(B):
        u_r = (f_r[0].bin_of(s1[b]), f_r[1].bin_of(s2[b]))
        got = _deliver(cfg.link, "relay", cfg.relay_rates, u_r, (f_r[0].n_bins, f_r[1].n_bins), rng)
        e1, e2, _ = decode_pair(
            seq1[f_r[0].members(got[0])], seq2[f_r[1].members(got[1])],
            w3[b], pmf_relay, cfg.epsilon, cfg.decoder,
        )
        relay_ok[b] = e1 is not None and np.array_equal(e1, s1[b]) and np.array_equal(e2, s2[b])
        n_d = (f_d[0].n_bins, f_d[1].n_bins)
        if cfg.regular:
            # One codebook: the relay forwards the index it received.
            fwd = got if None not in got else [int(rng.integers(n)) for n in n_d]
        elif relay_ok[b]:
            fwd = (f_d[0].bin_of(e1), f_d[1].bin_of(e2))
        else:
            # Relay's forwarded codeword disagrees with the sources': channel decoding fails.
            fwd = [int(rng.integers(n)) for n in n_d]
        dest_idx[b] = _deliver(cfg.link, "dest", cfg.dest_rates, fwd, n_d, rng)

    dest_ok = np.zeros(B, dtype=bool)
    ambiguous = 0
    for b in reversed(range(B)):
        u = dest_idx[b]
        e1, e2, n = decode_pair(
            seq1[f_d[0].members(u[0])], seq2[f_d[1].members(u[1])],
            w[b], pmf_dest, cfg.epsilon, cfg.decoder,
        )
        ambiguous += int(n != 1)
        dest_ok[b] = e1 is not None and np.array_equal(e1, s1[b]) and np.array_equal(e2, s2[b])
    system_ok = dest_ok & relay_ok if cfg.scenario == "mabrc" else dest_ok
    return int((~relay_ok).sum()), int((~dest_ok).sum()), int((~system_ok).sum()), ambiguous


def run_scheme(cfg: SchemeConfig, trials: int, seed: int = 0, workers: int = 1) -> TrialReport:
    """Monte Carlo block error rates of the separation scheme.

    Each trial draws fresh binning codes and ``B`` source blocks from a
    stream keyed by ``(seed, trial)``, so results do not depend on
    ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cfg.check_cap()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda t: _run_trial(cfg, seed, t), range(trials)))
    else:
        parts = [_run_trial(cfg, seed, t) for t in range(trials)]
    r, d, s, a = (int(sum(x)) for x in zip(*parts))
    blocks = trials * cfg.B
    return TrialReport(
        relay_error_rate=r / blocks,
        destination_error_rate=d / blocks,
        system_error_rate=s / blocks,
        relay_errors=r,
        destination_errors=d,
        system_errors=s,
        destination_ambiguous=a,
        blocks=blocks,
        trials=trials,
        seed=seed,
        margins=cfg.margins(),
    )


_SWEEP_PARAMS = {
    "R1d": ("dest_rates", 0, "dest_s1", "destination_errors"),
    "R2d": ("dest_rates", 1, "dest_s2", "destination_errors"),
    "R1r": ("relay_rates", 0, "relay_s1", "relay_errors"),
    "R2r": ("relay_rates", 1, "relay_s2", "relay_errors"),
}

SWEEP_COLUMNS = ("rate", "errors", "trials", "margin", "error_rate")


@dataclass(frozen=True)
class SweepResult:
    param: str
    rows: list
    monotone_violations: list

    @property
    def error_rates(self) -> list[float]:
        return [r["error_rate"] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row[k] for k in SWEEP_COLUMNS})
        return buf.getvalue()


def _with_rate(cfg: SchemeConfig, param: str, value: float) -> SchemeConfig:
    attr, pos, _, _ = _SWEEP_PARAMS[param]
    rates = list(getattr(cfg, attr))
    rates[pos] = float(value)
    if cfg.regular:
        return replace(cfg, relay_rates=tuple(rates), dest_rates=tuple(rates))
    return replace(cfg, **{attr: tuple(rates)})


def threshold_sweep(
    cfg: SchemeConfig, rates: Sequence[float], trials: int, seed: int = 0,
    param: str = "R1d", workers: int = 1,
) -> SweepResult:
    """Error rate against one bin rate, with common random numbers.

    ``margin`` is the rate minus the matching single-source conditional
    entropy. Consecutive points whose error rate rises by more than two
    standard errors are listed in ``monotone_violations``.
    """
    if len(rates) == 0:
        raise ValueError("rate grid is empty")
    if param not in _SWEEP_PARAMS:
        raise ValueError(f"param must be one of {sorted(_SWEEP_PARAMS)}")
    _, _, key, err_field = _SWEEP_PARAMS[param]
    h = entropy_vector(cfg.sources).as_dict()[key]
    rows = []
    for r in sorted(float(x) for x in rates):
        rep = run_scheme(_with_rate(cfg, param, r), trials, seed, workers)
        errors = getattr(rep, err_field)
        rows.append({
            "rate": r, "errors": errors, "trials": rep.blocks,
            "margin": r - h, "error_rate": errors / rep.blocks,
        })
    violations = []
    for i in range(len(rows) - 1):
        p0, p1 = rows[i]["error_rate"], rows[i + 1]["error_rate"]
        n = rows[i]["trials"]
        pbar = 0.5 * (p0 + p1)
        sigma = math.sqrt(max(pbar * (1 - pbar), 1.0 / n) * 2.0 / n)
        if p1 - p0 > 2 * sigma:
            violations.append((rows[i]["rate"], rows[i + 1]["rate"]))
    return SweepResult(param, rows, violations)


@dataclass(frozen=True)
class ComparisonReport:
    target: float
    irregular_budget: float | None
    regular_budget: float | None
    irregular_rates: dict | None
    regular_rates: dict | None
    grid: list
    irregular_errors: list
    regular_errors: list

    @property
    def advantage(self) -> float | None:
        if self.irregular_budget is None or self.regular_budget is None:
            return None
        return self.regular_budget - self.irregular_budget

    def to_dict(self) -> dict:
        d = asdict(self)
        d["advantage"] = self.advantage
        return d


def verify_regular_vs_irregular(
    sources: JointSourceDist,
    m: int,
    margins: Sequence[float],
    trials: int,
    seed: int = 0,
    target: float = 0.05,
    epsilon: float = 0.05,
    decoder: str = "typical",
    B: int = 1,
    workers: int = 1,
) -> ComparisonReport:
    """Smallest total bin-rate budget reaching ``target`` MABRC error.

    For each margin the irregular scheme uses independent relay and
    destination corner rates (relay from the W3 entropies, destination from
    the W entropies); the regular scheme ties them at the larger of the two.
    Budget is ``R1r + R2r + R1d + R2d``.
    """
    h = entropy_vector(sources)
    irr_err, reg_err = [], []
    irr = reg = None
    grid = sorted(float(x) for x in margins)
    for delta in grid:
        rr = corner_rates(*h.relay, delta)
        dr = corner_rates(*h.dest, delta)
        tied = (max(rr[0], dr[0]), max(rr[1], dr[1]))
        common = dict(m=m, B=B, epsilon=epsilon, decoder=decoder, scenario="mabrc")
        if irr is None:
            rep = run_scheme(SchemeConfig(sources, relay_rates=rr, dest_rates=dr, **common), trials, seed, workers)
            irr_err.append(rep.system_error_rate)
            if rep.system_error_rate <= target:
                irr = {"margin": delta, "relay_rates": rr, "dest_rates": dr, "budget": sum(rr) + sum(dr)}
        else:
            irr_err.append(None)
        if reg is None:
            rep = run_scheme(
                SchemeConfig(sources, relay_rates=tied, dest_rates=tied, regular=True, **common),
                trials, seed, workers,
            )
            reg_err.append(rep.system_error_rate)
            if rep.system_error_rate <= target:
                reg = {"margin": delta, "relay_rates": tied, "dest_rates": tied, "budget": 2 * sum(tied)}
        else:
            reg_err.append(None)
        if irr is not None and reg is not None:
            break
    return ComparisonReport(
        target=target,
        irregular_budget=irr["budget"] if irr else None,
        regular_budget=reg["budget"] if reg else None,
        irregular_rates=irr,
        regular_rates=reg,
        grid=grid,
        irregular_errors=irr_err,
        regular_errors=reg_err,
    )
