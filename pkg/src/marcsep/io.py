"""JSON schemas for instances and configs.

Probability tables are flattened row-major (C order) over the axes listed
below; alphabets are lists of symbol labels.

sources::

    {"alphabets": {"S1": [...], "S2": [...], "W": [...], "W3": [...]},
     "pmf": [p(s1, s2, w, w3) ...]}

or a preset ``{"preset": "doubly_symmetric", "crossover": 0.1, "w": "s2",
"w_noise": 0.1, "w3": "s2", "w3_noise": 0.1}``.

channel::

    {"inputs": {"X1": [...], "X2": [...], "X3": [...]},
     "outputs": {"Y": [...], "Y3": [...]},
     "kernel": [p(y, y3 | x1, x2, x3) over (x1, x2, x3, y, y3) ...]}

or ``{"preset": "identity" | "asymmetric" | "useless"}``.

factored input (``"uniform"`` is also accepted)::

    {"p_v1": [...], "p_x1_given_v1": [[...], ...], "p_v2": [...],
     "p_x2_given_v2": [[...], ...], "p_x3_given_v1v2": [[[...]]]}

fading config::

    {"attenuations": {"a11": .., "a21": .., "a31": .., "a13": .., "a23": ..},
     "powers": [P1, P2, P3], "kind": "phase" | "rayleigh",
     "samples": 1000000, "seed": 0}

scheme config::

    {"sources": {...}, "m": 12, "B": 1, "relay_rates": [R1r, R2r],
     "dest_rates": [R1d, R2d], "epsilon": 0.05, "decoder": "typical",
     "regular": false, "scenario": "marc",
     "link": {"kind": "ideal" | "erasure" | "capacity", "erasure_prob": 0.1,
              "capacities": [6 numbers], "kappa": 1.0}}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import instances
from .dm_regions import EntropyVector
from .fading import FadingMarcConfig
from .probability import (
    Alphabet,
    DmChannel,
    FactoredInputDist,
    JointSourceDist,
    ValidationError,
)
from .simulator import LinkModel, SchemeConfig

__all__ = [
    "ConfigError",
    "load_json",
    "sources_from_dict",
    "sources_to_dict",
    "channel_from_dict",
    "channel_to_dict",
    "inputs_from_dict",
    "inputs_to_dict",
    "fading_from_dict",
    "fading_to_dict",
    "scheme_from_dict",
    "scheme_to_dict",
    "entropies_from_dict",
]


class ConfigError(ValueError):
    """Unreadable or malformed JSON."""


def load_json(path) -> dict:
    """Parse a JSON file, reporting ``file:line:col`` on syntax errors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object")
    if key not in d:
        raise ValidationError(f"{where}: missing field {key!r}")
    return d[key]


def _alphabets(section: dict, names, where: str) -> tuple[Alphabet, ...]:
    out = []
    for n in names:
        syms = _require(section, n, where)
        if isinstance(syms, int):
            out.append(Alphabet.range(n, syms))
        else:
            out.append(Alphabet(n, tuple(syms)))
    return tuple(out)


def _table(values, shape, where: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size != int(np.prod(shape)):
        raise ValidationError(f"{where}: expected {int(np.prod(shape))} entries, got {arr.size}")
    return arr.reshape(shape)


def sources_from_dict(d: dict) -> JointSourceDist:
    if "preset" in d:
        preset = d["preset"]
        if preset != "doubly_symmetric":
            raise ValidationError(f"sources: unknown preset {preset!r}")
        kw = {k: d[k] for k in ("crossover", "w", "w_noise", "w3", "w3_noise") if k in d}
        return instances.doubly_symmetric_sources(**kw)
    alph = _alphabets(_require(d, "alphabets", "sources"), ("S1", "S2", "W", "W3"), "sources.alphabets")
    pmf = _table(_require(d, "pmf", "sources"), tuple(a.size for a in alph), "sources.pmf")
    return JointSourceDist(pmf, alphabets=alph)


def sources_to_dict(src: JointSourceDist) -> dict:
    return {
        "alphabets": {a.name: list(a.symbols) for a in src.alphabets},
        "pmf": src.table.ravel().tolist(),
    }


_CHANNEL_PRESETS = {
    "identity": instances.identity_channel,
    "asymmetric": instances.asymmetric_channel,
    "useless": instances.useless_channel,
}


def channel_from_dict(d: dict) -> DmChannel:
    if "preset" in d:
        try:
            return _CHANNEL_PRESETS[d["preset"]]()
        except KeyError:
            raise ValidationError(f"channel: unknown preset {d['preset']!r}") from None
    ins = _alphabets(_require(d, "inputs", "channel"), ("X1", "X2", "X3"), "channel.inputs")
    outs = _alphabets(_require(d, "outputs", "channel"), ("Y", "Y3"), "channel.outputs")
    shape = tuple(a.size for a in ins + outs)
    kernel = _table(_require(d, "kernel", "channel"), shape, "channel.kernel")
    return DmChannel(kernel, ins, outs)


def channel_to_dict(ch: DmChannel) -> dict:
    return {
        "inputs": {a.name: list(a.symbols) for a in ch.inputs},
        "outputs": {a.name: list(a.symbols) for a in ch.outputs},
        "kernel": ch.kernel.ravel().tolist(),
    }


_FACTORS = ("p_v1", "p_x1_given_v1", "p_v2", "p_x2_given_v2", "p_x3_given_v1v2")


def inputs_from_dict(d, channel: DmChannel | None = None) -> FactoredInputDist:
    if d is None or d == "uniform":
        if channel is None:
            raise ValidationError("input: 'uniform' needs a channel to size the alphabets")
        return FactoredInputDist.uniform(channel.input_shape)
    return FactoredInputDist(*(np.asarray(_require(d, k, "input"), dtype=float) for k in _FACTORS))


def inputs_to_dict(fi: FactoredInputDist) -> dict:
    return {k: getattr(fi, k).tolist() for k in _FACTORS}


def fading_from_dict(d: dict) -> FadingMarcConfig:
    att = _require(d, "attenuations", "fading")
    pw = _require(d, "powers", "fading")
    if isinstance(pw, dict):
        pw = [pw.get(k, 0.0) for k in ("P1", "P2", "P3")]
    if len(pw) != 3:
        raise ValidationError("fading.powers: need [P1, P2, P3]")
    try:
        return FadingMarcConfig(
            **{k: float(_require(att, k, "fading.attenuations")) for k in ("a11", "a21", "a31", "a13", "a23")},
            P1=float(pw[0]), P2=float(pw[1]), P3=float(pw[2]),
            kind=d.get("kind", "phase"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"fading: {exc}") from exc


def fading_to_dict(cfg: FadingMarcConfig) -> dict:
    return {
        "attenuations": {k: getattr(cfg, k) for k in ("a11", "a21", "a31", "a13", "a23")},
        "powers": [cfg.P1, cfg.P2, cfg.P3],
        "kind": cfg.kind,
    }


def entropies_from_dict(d) -> EntropyVector:
    """Either a full six-entry object or ``{"dest": [3], "relay": [3]}``."""
    if "dest" in d:
        dest = list(d["dest"])
        relay = list(d.get("relay", dest))
        return EntropyVector(*relay, *dest)
    return EntropyVector(**{k: float(v) for k, v in d.items()})


def _link_from_dict(d) -> LinkModel:
    if d is None:
        return LinkModel()
    try:
        caps = d.get("capacities")
        return LinkModel(
            kind=d.get("kind", "ideal"),
            erasure_prob=float(d.get("erasure_prob", 0.0)),
            capacities=tuple(caps) if caps is not None else None,
            kappa=d.get("kappa"),
        )
    except ValueError as exc:
        raise ValidationError(f"scheme.link: {exc}") from exc


def scheme_from_dict(d: dict) -> SchemeConfig:
    sources = sources_from_dict(_require(d, "sources", "scheme"))
    try:
        return SchemeConfig(
            sources=sources,
            m=int(_require(d, "m", "scheme")),
            B=int(d.get("B", 1)),
            relay_rates=tuple(_require(d, "relay_rates", "scheme")),
            dest_rates=tuple(_require(d, "dest_rates", "scheme")),
            epsilon=float(d.get("epsilon", 0.05)),
            link=_link_from_dict(d.get("link")),
            decoder=d.get("decoder", "typical"),
            regular=bool(d.get("regular", False)),
            scenario=d.get("scenario", "marc"),
        )
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"scheme: {exc}") from exc


def scheme_to_dict(cfg: SchemeConfig) -> dict:
    link = {"kind": cfg.link.kind}
    if cfg.link.kind == "erasure":
        link["erasure_prob"] = cfg.link.erasure_prob
    if cfg.link.kind == "capacity":
        link["capacities"] = list(cfg.link.capacities)
        link["kappa"] = cfg.link.kappa
    return {
        "sources": sources_to_dict(cfg.sources),
        "m": cfg.m,
        "B": cfg.B,
        "relay_rates": list(cfg.relay_rates),
        "dest_rates": list(cfg.dest_rates),
        "epsilon": cfg.epsilon,
        "decoder": cfg.decoder,
        "regular": cfg.regular,
        "scenario": cfg.scenario,
        "link": link,
    }
