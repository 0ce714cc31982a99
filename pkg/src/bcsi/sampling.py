"""Random generators for channels, auxiliaries, and joints.

All draws are flat Dirichlet (uniform on the simplex) from an explicit
``numpy.random.Generator``, so every consumer stays reproducible given a
seed.
"""

from __future__ import annotations

import numpy as np

from .probability import AuxFactorization, ChannelSpec, JointPmf, Kernel, Pmf, build_joint


def random_pmf(rng: np.random.Generator, k: int) -> np.ndarray:
    """One point drawn uniformly from the k-simplex."""
    return rng.dirichlet(np.ones(k))


def random_rows(rng: np.random.Generator, shape: tuple[int, ...], k: int) -> np.ndarray:
    """An array of independent simplex points with row alphabet k."""
    flat = rng.dirichlet(np.ones(k), size=int(np.prod(shape)) if shape else 1)
    return flat.reshape(shape + (k,))


def random_channel(
    rng: np.random.Generator,
    model: str = "multilevel",
    nx: int = 2,
    ns: int = 2,
    ny1: int = 2,
    ny2: int = 2,
    ny3: int = 2,
) -> ChannelSpec:
    """A fully random channel of the requested model and alphabet sizes."""
    p_s = Pmf(random_pmf(rng, ns))
    if model == "multilevel":
        main = Kernel(
            random_rows(rng, (nx, ns), ny1 * ny3).reshape(nx, ns, ny1, ny3),
            (("X", nx), ("S", ns)),
            (("Y1", ny1), ("Y3", ny3)),
        )
        deg = Kernel(random_rows(rng, (ny1,), ny2), (("Y1", ny1),), (("Y2", ny2),))
        return ChannelSpec("multilevel", p_s, main, deg)
    main = Kernel(
        random_rows(rng, (nx, ns), ny1 * ny2 * ny3).reshape(nx, ns, ny1, ny2, ny3),
        (("X", nx), ("S", ns)),
        (("Y1", ny1), ("Y2", ny2), ("Y3", ny3)),
    )
    return ChannelSpec(model, p_s, main)


def random_aux(
    rng: np.random.Generator, ch: ChannelSpec, card_u: int = 2, card_v: int = 2
) -> AuxFactorization:
    """Random auxiliary factorization compatible with the channel."""
    sizes = ch.sizes
    nx, ns = sizes["X"], sizes["S"]
    return AuxFactorization.from_tables(
        random_rows(rng, (ns,), card_u),
        random_rows(rng, (card_u, ns), card_v),
        random_rows(rng, (card_v, ns), nx),
    )


def random_multilevel_joint(
    rng: np.random.Generator, card_u: int = 2, card_v: int = 2, **alphabet_sizes
) -> JointPmf:
    """Random joint from a random multilevel channel plus random auxiliaries."""
    ch = random_channel(rng, "multilevel", **alphabet_sizes)
    return build_joint(ch, random_aux(rng, ch, card_u, card_v))


def random_less_noisy_joint(
    rng: np.random.Generator, card_u: int = 2, card_v: int = 2, **alphabet_sizes
) -> JointPmf:
    """Random joint from a random less-noisy-model channel plus auxiliaries."""
    ch = random_channel(rng, "less_noisy", **alphabet_sizes)
    return build_joint(ch, random_aux(rng, ch, card_u, card_v))
