"""Small named instances used in tests, demos and documentation."""

from __future__ import annotations

import numpy as np

from .probability import DmChannel, FactoredInputDist, JointSourceDist

__all__ = [
    "doubly_symmetric_pair",
    "side_info_channel",
    "make_sources",
    "doubly_symmetric_sources",
    "identity_channel",
    "useless_channel",
    "asymmetric_channel",
    "asymmetric_instance",
]


def doubly_symmetric_pair(crossover: float) -> np.ndarray:
    """p(s1, s2) with S1 a uniform bit and S2 = S1 xor Bernoulli(crossover)."""
    a = float(crossover)
    return 0.5 * np.array([[1 - a, a], [a, 1 - a]])


def side_info_channel(kind: str, noise: float = 0.0, shape=(2, 2)) -> np.ndarray:
    """p(side | s1, s2) for a few standard side-information models.

    ``const``: a single symbol. ``s1`` / ``s2``: that source through a
    binary symmetric channel with crossover ``noise``. ``pair``: the pair
    (s1, s2) itself.
    """
    k1, k2 = shape
    if kind == "const":
        return np.ones((k1, k2, 1))
    if kind == "pair":
        out = np.zeros((k1, k2, k1 * k2))
        for s1 in range(k1):
            for s2 in range(k2):
                out[s1, s2, s1 * k2 + s2] = 1.0
        return out
    if kind in ("s1", "s2"):
        k = k1 if kind == "s1" else k2
        if k != 2 and noise > 0:
            raise ValueError("noisy copies are defined for binary sources only")
        out = np.zeros((k1, k2, k))
        for s1 in range(k1):
            for s2 in range(k2):
                s = s1 if kind == "s1" else s2
                out[s1, s2, s] = 1.0 - noise
                if noise > 0:
                    out[s1, s2, 1 - s] = noise
        return out
    raise ValueError(f"unknown side-information kind {kind!r}")


def make_sources(p_s1s2, p_w, p_w3) -> JointSourceDist:
    """Sources with W and W3 conditionally independent given (S1, S2)."""
    table = np.einsum("ab,abc,abd->abcd", p_s1s2, p_w, p_w3)
    return JointSourceDist(table / table.sum())


def doubly_symmetric_sources(
    crossover: float = 0.1,
    w: str = "s2",
    w_noise: float = 0.1,
    w3: str = "s2",
    w3_noise: float = 0.1,
) -> JointSourceDist:
    """Doubly-symmetric binary sources with configurable side information.

    The default gives both receivers a noisy copy of S2 (``W = W3``).
    """
    return make_sources(
        doubly_symmetric_pair(crossover),
        side_info_channel(w, w_noise),
        side_info_channel(w3, w3_noise),
    )


def identity_channel() -> DmChannel:
    """Binary inputs; Y = (X1, X2, X3) and Y3 = (X1, X2), noiseless."""
    return DmChannel.from_function(
        (2, 2, 2), (8, 4), lambda x1, x2, x3: (4 * x1 + 2 * x2 + x3, 2 * x1 + x2)
    )


def useless_channel(shape=(2, 2, 2), out=(2, 2)) -> DmChannel:
    """Outputs uniform and independent of every input."""
    kernel = np.full(tuple(shape) + tuple(out), 1.0 / (out[0] * out[1]))
    return DmChannel(kernel)


def asymmetric_channel() -> DmChannel:
    """Relay link stronger than the destination link.

    X1, X2 are 4-ary and X3 binary. The relay sees (X1, X2) exactly; the
    destination sees only the low bit of each source input plus X3.
    """
    return DmChannel.from_function(
        (4, 4, 2), (8, 16), lambda x1, x2, x3: (4 * (x1 % 2) + 2 * (x2 % 2) + x3, 4 * x1 + x2)
    )


def asymmetric_instance():
    """(sources, channel, inputs) where irregular encoding strictly beats regular.

    Relay side information is useless (W3 constant) while the destination
    has a noisy copy of S2, so the relay entropies exceed the destination
    ones; the relay link carries 4 bits per use against 3 at the destination.
    """
    sources = doubly_symmetric_sources(0.1, w="s2", w_noise=0.1, w3="const")
    channel = asymmetric_channel()
    inputs = FactoredInputDist.uniform(channel.input_shape)
    return sources, channel, inputs
