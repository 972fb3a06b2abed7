"""Phase- and Rayleigh-fading Gaussian MARC regions.

Received signals follow

    Y  = H11 X1 + H21 X2 + H31 X3 + Z
    Y3 = H13 X1 + H23 X2 + Z3

with ``H_li = a_li * exp(j Theta)`` (phase fading) or ``H_li = a_li * U``,
``U ~ CN(0, 1)`` (Rayleigh fading), unit-variance noise and per-symbol
powers ``P1, P2, P3``. Rates are for independent Gaussian inputs with
decode-and-forward at the relay; receivers know their incoming fading.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .dm_regions import EntropyVector, kappa_bound
from .expint import exp_scaled_e1
from .probability import JointSourceDist

__all__ = [
    "FadingMarcConfig",
    "FadingRegion",
    "MonteCarloEstimate",
    "FadingReport",
    "phase_conditions",
    "phase_region",
    "phase_converse_kappa",
    "rayleigh_conditions",
    "rayleigh_region",
    "ergodic_rate_closed_form",
    "ergodic_rate_monte_carlo",
    "fading_kappa_star",
    "fading_converse_kappa",
    "mabrc_check",
    "mabrc_kappa_star",
    "fading_report",
    "sweep_configs",
]

KINDS = ("phase", "rayleigh")
LIMIT_REL = 1e-6
MC_CHUNK_PAIRS = 1 << 16
Z95 = 1.959963984540054


@dataclass(frozen=True)
class FadingMarcConfig:
    """Attenuations ``a_li`` (link l -> i, 3 = relay, 1 = destination for the
    second index) and transmit powers."""

    a11: float
    a21: float
    a31: float
    a13: float
    a23: float
    P1: float
    P2: float
    P3: float
    kind: str = "phase"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("a11", "a21", "a31", "a13", "a23", "P1", "P2", "P3"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
            object.__setattr__(self, name, v)

    @property
    def gains(self) -> dict[str, float]:
        """Mean received SNR per link, ``a_li^2 * P_l``."""
        return {
            "g11": self.a11**2 * self.P1,
            "g21": self.a21**2 * self.P2,
            "g31": self.a31**2 * self.P3,
            "g13": self.a13**2 * self.P1,
            "g23": self.a23**2 * self.P2,
        }

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FadingRegion:
    """Destination rates ``c1, c2, csum`` and relay rates (bits/channel use)."""

    c1: float
    c2: float
    csum: float
    relay_c1: float
    relay_c2: float
    relay_csum: float
    conditions_hold: bool
    condition_slack: tuple[float, float, float]
    kind: str
    limit_case: bool = False

    @property
    def dest(self) -> tuple[float, float, float]:
        return (self.c1, self.c2, self.csum)

    @property
    def relay(self) -> tuple[float, float, float]:
        return (self.relay_c1, self.relay_c2, self.relay_csum)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["condition_slack"] = [_jf(s) for s in self.condition_slack]
        return d


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    half_width_95: float
    sample_count: int
    seed: int

    def covers(self, value: float) -> bool:
        return abs(value - self.mean) <= self.half_width_95

    def to_dict(self) -> dict:
        return asdict(self)


def _jf(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _need(cfg: FadingMarcConfig, kind: str) -> None:
    if cfg.kind != kind:
        raise ValueError(f"expected a {kind}-fading config, got kind={cfg.kind!r}")


def phase_conditions(cfg: FadingMarcConfig) -> tuple[bool, tuple[float, float, float]]:
    """Relay-decoding dominance conditions for phase fading.

    Returns ``(holds, slack)`` with ``slack = RHS - LHS`` per condition.
    """
    _need(cfg, "phase")
    g = cfg.gains
    lhs = (g["g11"] + g["g31"], g["g21"] + g["g31"], g["g11"] + g["g21"] + g["g31"])
    rhs = (g["g13"], g["g23"], g["g13"] + g["g23"])
    slack = tuple(r - l for r, l in zip(rhs, lhs))
    return all(s >= 0 for s in slack), slack


def phase_region(cfg: FadingMarcConfig) -> FadingRegion:
    _need(cfg, "phase")
    g = cfg.gains
    holds, slack = phase_conditions(cfg)
    return FadingRegion(
        c1=math.log2(1 + g["g11"] + g["g31"]),
        c2=math.log2(1 + g["g21"] + g["g31"]),
        csum=math.log2(1 + g["g11"] + g["g21"] + g["g31"]),
        relay_c1=math.log2(1 + g["g13"]),
        relay_c2=math.log2(1 + g["g23"]),
        relay_csum=math.log2(1 + g["g13"] + g["g23"]),
        conditions_hold=holds,
        condition_slack=slack,
        kind="phase",
    )


def _phi(x: float) -> float:
    """E[ln(1 + x|U|^2)] = exp(1/x) E1(1/x)."""
    return exp_scaled_e1(1.0 / x)


def rayleigh_conditions(
    cfg: FadingMarcConfig,
) -> tuple[bool, tuple[float, float, float], bool]:
    """Relay-decoding conditions for Rayleigh fading.

    Returns ``(holds, slack, limit_case)``. A relay link with zero mean
    SNR fails every condition it appears in (slack ``-inf``). When
    ``a13^2 P1`` and ``a23^2 P2`` agree to ``LIMIT_REL`` relative, the
    difference quotient of the third condition is replaced by a symmetric
    finite-difference limit and ``limit_case`` is set.
    """
    _need(cfg, "rayleigh")
    g = cfg.gains
    x1, x2 = g["g13"], g["g23"]
    lhs = (1 + g["g11"] + g["g31"], 1 + g["g21"] + g["g31"], 1 + g["g11"] + g["g21"] + g["g31"])
    rhs = [-math.inf, -math.inf, -math.inf]
    limit = False
    if x1 > 0:
        rhs[0] = x1 / _phi(x1)
    if x2 > 0:
        rhs[1] = x2 / _phi(x2)
    if x1 > 0 and x2 > 0:
        if abs(x2 - x1) <= LIMIT_REL * max(x1, x2):
            limit = True
            x = 0.5 * (x1 + x2)
            lo, hi = x * (1 - LIMIT_REL), x * (1 + LIMIT_REL)
            rhs[2] = (hi - lo) / (_phi(hi) - _phi(lo))
        else:
            rhs[2] = (x2 - x1) / (_phi(x2) - _phi(x1))
    slack = tuple(r - l for r, l in zip(rhs, lhs))
    return all(s >= 0 for s in slack), slack, limit


def ergodic_rate_closed_form(snr: float) -> float:
    """E[log2(1 + snr |U|^2)] for Rayleigh ``U``."""
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    if snr == 0:
        return 0.0
    return _phi(snr) / math.log(2)


def _chunk_stats(seed: int, chunk: int, n_pairs: int, gains: np.ndarray):
    ss = np.random.SeedSequence(seed, spawn_key=(chunk,))
    rng = np.random.Generator(np.random.Philox(ss))
    u = rng.random((n_pairs, gains.shape[1]))
    u[u == 0.0] = 2.0**-53
    e_a = -np.log(u)
    e_b = -np.log1p(-u)
    f = 0.5 * (np.log2(1.0 + e_a @ gains.T) + np.log2(1.0 + e_b @ gains.T))
    mean = f.mean(axis=0)
    m2 = ((f - mean) ** 2).sum(axis=0)
    return n_pairs, mean, m2


def _mc_rates(gains, samples: int, seed: int, workers: int = 1) -> list[MonteCarloEstimate]:
    """Antithetic Monte Carlo of E[log2(1 + sum_j G[r, j] E_j)], E_j i.i.d.
    unit exponentials; one estimate per row of ``gains``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    total_pairs = (samples + 1) // 2
    sizes = [MC_CHUNK_PAIRS] * (total_pairs // MC_CHUNK_PAIRS)
    if total_pairs % MC_CHUNK_PAIRS:
        sizes.append(total_pairs % MC_CHUNK_PAIRS)
    jobs = [(seed, k, n, gains) for k, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _chunk_stats(*a), jobs))
    else:
        parts = [_chunk_stats(*a) for a in jobs]
    # Chan et al. pairwise combination, fixed chunk order.
    n, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        delta = mb - mean
        tot = n + nb
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta**2 * n * nb / tot
        n = tot
    var = m2 / (n - 1) if n > 1 else np.zeros_like(m2)
    half = Z95 * np.sqrt(var / n)
    return [
        MonteCarloEstimate(float(mu), float(h), 2 * n, seed) for mu, h in zip(mean, half)
    ]


def ergodic_rate_monte_carlo(
    snrs: Sequence[float], samples: int = 10**6, seed: int = 0, workers: int = 1
) -> MonteCarloEstimate:
    """Monte Carlo E[log2(1 + sum_k snr_k |U_k|^2)] over independent Rayleigh terms."""
    return _mc_rates([list(snrs)], samples, seed, workers)[0]


def rayleigh_region(
    cfg: FadingMarcConfig, samples: int = 10**6, seed: int = 0, workers: int = 1
) -> tuple[FadingRegion, tuple[MonteCarloEstimate, MonteCarloEstimate, MonteCarloEstimate]]:
    """Ergodic destination and relay rates by Monte Carlo.

    Returns the region and the three destination-rate estimates with 95%
    confidence half-widths.
    """
    _need(cfg, "rayleigh")
    g = cfg.gains
    # Columns: |U11|^2 |U21|^2 |U31|^2 |U13|^2 |U23|^2
    G = np.array([
        [g["g11"], 0, g["g31"], 0, 0],
        [0, g["g21"], g["g31"], 0, 0],
        [g["g11"], g["g21"], g["g31"], 0, 0],
        [0, 0, 0, g["g13"], 0],
        [0, 0, 0, 0, g["g23"]],
        [0, 0, 0, g["g13"], g["g23"]],
    ])
    est = _mc_rates(G, samples, seed, workers)
    holds, slack, limit = rayleigh_conditions(cfg)
    region = FadingRegion(
        c1=est[0].mean, c2=est[1].mean, csum=est[2].mean,
        relay_c1=est[3].mean, relay_c2=est[4].mean, relay_csum=est[5].mean,
        conditions_hold=holds, condition_slack=slack, kind="rayleigh", limit_case=limit,
    )
    return region, (est[0], est[1], est[2])


def _dest_entropies(entropies) -> tuple[float, float, float]:
    if isinstance(entropies, EntropyVector):
        return entropies.dest
    h = tuple(float(v) for v in entropies)
    if len(h) != 3:
        raise ValueError("need the destination triple H(S1|S2,W), H(S2|S1,W), H(S1,S2|W)")
    return h


def fading_kappa_star(region: FadingRegion, entropies) -> float:
    """Smallest kappa meeting the destination constraints with the region's rates."""
    h = _dest_entropies(entropies)
    return max(kappa_bound(hi, ci) for hi, ci in zip(h, region.dest))


def phase_converse_kappa(cfg: FadingMarcConfig, entropies) -> float:
    """Necessary kappa bound for phase fading.

    Independent Gaussian inputs simultaneously maximise the three
    destination cut mutual informations; evaluated here from the received
    SNR sums directly.
    """
    _need(cfg, "phase")
    g = cfg.gains
    cut = (
        math.log1p(g["g11"] + g["g31"]) / math.log(2),
        math.log1p(g["g21"] + g["g31"]) / math.log(2),
        math.log1p(g["g11"] + g["g21"] + g["g31"]) / math.log(2),
    )
    h = _dest_entropies(entropies)
    return max(kappa_bound(hi, ci) for hi, ci in zip(h, cut))


def fading_converse_kappa(region: FadingRegion, entropies) -> float:
    """Converse bound from a region's destination rates (non-strict form)."""
    return fading_kappa_star(region, entropies)


def mabrc_check(sources) -> tuple[bool, tuple[float, float, float]]:
    """Relay side information at least as good as the destination's.

    ``slack = H_dest - H_relay`` per pair; holds iff all are >= 0.
    """
    ent = sources if isinstance(sources, EntropyVector) else None
    if ent is None:
        if not isinstance(sources, JointSourceDist):
            raise TypeError("expected a JointSourceDist or EntropyVector")
        from .dm_regions import entropy_vector

        ent = entropy_vector(sources)
    slack = tuple(d - r for d, r in zip(ent.dest, ent.relay))
    return all(s >= -1e-12 for s in slack), slack


def mabrc_kappa_star(region: FadingRegion, entropies: EntropyVector) -> float:
    """Regular-encoding MABRC kappa: relay and destination must both decode,
    ``max(H_relay, H_dest) < kappa * min(C_relay, C_dest)`` per pair."""
    return max(
        kappa_bound(max(hr, hd), min(cr, cd))
        for hr, hd, cr, cd in zip(entropies.relay, entropies.dest, region.relay, region.dest)
    )


@dataclass(frozen=True)
class FadingReport:
    config: FadingMarcConfig
    region: FadingRegion
    estimates: tuple | None = None
    entropies: EntropyVector | None = None
    extra: dict = field(default_factory=dict)

    @property
    def kappa_star(self) -> float | None:
        if self.entropies is None:
            return None
        return fading_kappa_star(self.region, self.entropies)

    @property
    def converse_kappa(self) -> float | None:
        if self.entropies is None:
            return None
        if self.config.kind == "phase":
            return phase_converse_kappa(self.config, self.entropies)
        return fading_converse_kappa(self.region, self.entropies)

    @property
    def separation_optimal(self) -> bool:
        return self.region.conditions_hold

    def to_dict(self) -> dict:
        d = {
            "config": self.config.to_dict(),
            "region": self.region.to_dict(),
            "conditions_hold": self.region.conditions_hold,
            "separation_optimal": self.separation_optimal,
        }
        if self.estimates is not None:
            d["monte_carlo"] = {
                k: e.to_dict() for k, e in zip(("c1", "c2", "csum"), self.estimates)
            }
        if self.entropies is not None:
            holds, slack = mabrc_check(self.entropies)
            d["entropies"] = self.entropies.as_dict()
            d["kappa_star"] = _jf(self.kappa_star)
            d["converse_kappa"] = _jf(self.converse_kappa)
            d["mabrc"] = {
                "conditions_hold": holds,
                "condition_slack": list(slack),
                "kappa_star": _jf(mabrc_kappa_star(self.region, self.entropies)),
                "separation_optimal": bool(holds and self.region.conditions_hold),
            }
        d.update(self.extra)
        return d


def fading_report(
    cfg: FadingMarcConfig,
    entropies: EntropyVector | JointSourceDist | None = None,
    samples: int = 10**6,
    seed: int = 0,
    workers: int = 1,
) -> FadingReport:
    if isinstance(entropies, JointSourceDist):
        from .dm_regions import entropy_vector

        entropies = entropy_vector(entropies)
    if cfg.kind == "phase":
        return FadingReport(cfg, phase_region(cfg), None, entropies)
    region, est = rayleigh_region(cfg, samples, seed, workers)
    return FadingReport(cfg, region, est, entropies)


def sweep_configs(cfg: FadingMarcConfig, param: str, values: Sequence[float]) -> list[FadingMarcConfig]:
    """Copies of ``cfg`` with one field set to each of ``values``."""
    if param not in ("a11", "a21", "a31", "a13", "a23", "P1", "P2", "P3"):
        raise ValueError(f"cannot sweep {param!r}")
    return [replace(cfg, **{param: float(v)}) for v in values]
