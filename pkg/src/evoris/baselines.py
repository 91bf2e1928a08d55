"""Non-neural reference policies for per-block phase/precoder selection.

All three act on one ChannelSet at a time: a small per-precoder genetic
search over binary phase strings, an exhaustive enumerator for instances
small enough to brute-force, and a uniform random control arm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .system import LinkBudget


@dataclass(frozen=True)
class LgaParams:
    """Per-precoder genetic search settings.

    ``p_mut`` defaults to one expected bit flip per string (1/n_bits) and
    ``n_parents`` to half the population.  The search keeps the top-ranked
    parents unchanged each generation (steady-state survivors, so at least
    one elite), breeds the rest by single-point crossover of rank-ordered
    parent pairs, and bit-flips offspring entries.
    """

    individuals: int = 15
    generations: int = 5
    p_mut: float | None = None
    n_parents: int | None = None

    def __post_init__(self):
        if self.individuals < 2:
            raise ValueError("individuals must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.p_mut is not None and not 0.0 <= self.p_mut <= 1.0:
            raise ValueError("p_mut must lie in [0, 1]")
        if self.n_parents is not None and not 1 <= self.n_parents < self.individuals:
            raise ValueError("n_parents must lie in [1, individuals)")


@dataclass
class LgaResult:
    phases: object
    precoder_index: int
    gamma: float
    evaluations: int


def _cascade_matrix(cs: ChannelSet) -> np.ndarray:
    """Columns such that m = conj(h) + B @ coef for concatenated RIS coefs."""
    blocks = [np.conj(h1) * np.conj(h2)[None, :]
              for h1, h2 in zip(cs.h1_list, cs.h2_list)]
    return np.concatenate(blocks, axis=1)


def _split_phases(cs: ChannelSet, flat: np.ndarray):
    if cs.ris_count == 1:
        return flat.copy()
    n = cs.h2_list[0].shape[0]
    return [flat[k * n:(k + 1) * n].copy() for k in range(cs.ris_count)]


def _population_gammas(coefs: np.ndarray, base: np.ndarray, bt: np.ndarray,
                       v: np.ndarray, scale: float) -> np.ndarray:
    m = base[None, :] + coefs @ bt
    return scale * np.abs(m @ v) ** 2


def lga_solve(cs: ChannelSet, budget: LinkBudget, codebook: np.ndarray,
              params: LgaParams, rng: np.random.Generator,
              init: np.ndarray | None = None) -> LgaResult:
    """Best (phases, precoder) found by an independent genetic search per beam.

    For every codebook column a small population of {-1,+1} strings evolves
    for the configured generations; the best pair ever evaluated wins, with
    ties broken toward the lowest precoder index.  ``init`` optionally seeds
    each per-beam search with a fixed starting population.
    """
    n_bits = sum(h2.shape[0] for h2 in cs.h2_list)
    p_mut = params.p_mut if params.p_mut is not None else 1.0 / n_bits
    n_parents = params.n_parents if params.n_parents is not None \
        else max(1, params.individuals // 2)
    n_off = params.individuals - n_parents
    if init is not None:
        init = np.asarray(init, dtype=np.float64)
        if init.shape != (params.individuals, n_bits):
            raise ValueError("init population must be (individuals, n_bits)")
        if not np.all(np.isin(init, (-1.0, 1.0))):
            raise ValueError("init population entries must be -1 or +1")

    base = np.conj(cs.h)
    bt = _cascade_matrix(cs).T
    scale = budget.tx_power_w / budget.noise_power_w

    best_gamma = -1.0
    best_flat = None
    best_idx = -1
    evaluations = 0

    for v_idx in range(codebook.shape[1]):
        v = codebook[:, v_idx]
        if init is not None:
            pop = init.copy()
        else:
            pop = rng.integers(0, 2, size=(params.individuals, n_bits)) * 2.0 - 1.0
        for _ in range(params.generations):
            # population rows are phases; they reflect with coefficient -phase
            gammas = _population_gammas(-pop, base, bt, v, scale)
            evaluations += params.individuals
            order = np.argsort(-gammas, kind="stable")
            pop = pop[order]
            gammas = gammas[order]
            if gammas[0] > best_gamma:
                best_gamma = float(gammas[0])
                best_flat = pop[0].copy()
                best_idx = v_idx
            if n_off > 0:
                parents = pop[:n_parents]
                children = np.empty((n_off, n_bits))
                points = rng.integers(1, n_bits, size=n_off) if n_bits > 1 \
                    else np.zeros(n_off, dtype=np.int64)
                for j in range(n_off):
                    p1 = parents[j % n_parents]
                    p2 = parents[(j + 1) % n_parents]
                    c = int(points[j])
                    children[j, :c] = p1[:c]
                    children[j, c:] = p2[c:]
                flips = rng.random((n_off, n_bits)) < p_mut
                children = np.where(flips, -children, children)
                pop[n_parents:] = children

    return LgaResult(phases=_split_phases(cs, best_flat), precoder_index=best_idx,
                     gamma=best_gamma, evaluations=evaluations)


def exhaustive_oracle(cs: ChannelSet, budget: LinkBudget, codebook: np.ndarray,
                      cap: int = 2 ** 20) -> tuple:
    """Exact SNR maximizer over all binary phase strings and codebook beams.

    Enumerates the 2^n_bits strings in ascending lexicographic order
    (-1 before +1) in chunks; ties resolve to the lexicographically lowest
    string and then the lowest precoder index.  Refuses instances where
    2^n_bits * |V| exceeds ``cap``.
    """
    n_bits = sum(h2.shape[0] for h2 in cs.h2_list)
    n_v = codebook.shape[1]
    total = (1 << n_bits) * n_v
    if total > cap:
        raise ValueError(f"search space 2^{n_bits} * {n_v} = {total} exceeds cap {cap}")

    base = np.conj(cs.h)
    bt = _cascade_matrix(cs).T
    scale = budget.tx_power_w / budget.noise_power_w
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.uint64)

    best_gamma = -1.0
    best_flat = None
    best_idx = -1
    chunk = 1 << 14
    for start in range(0, 1 << n_bits, chunk):
        stop = min(start + chunk, 1 << n_bits)
        idx = np.arange(start, stop, dtype=np.uint64)
        bits = (idx[:, None] >> shifts[None, :]) & np.uint64(1)
        phases = bits.astype(np.float64) * 2.0 - 1.0          # bit 0 -> -1, 1 -> +1
        coefs = -phases                                        # -1 reflects as +1
        m = base[None, :] + coefs @ bt
        gammas = scale * np.abs(m @ codebook) ** 2             # (chunk, |V|)
        flat_pos = int(np.argmax(gammas))
        g = float(gammas.reshape(-1)[flat_pos])
        if g > best_gamma:
            best_gamma = g
            best_flat = phases[flat_pos // n_v].copy()
            best_idx = flat_pos % n_v

    return _split_phases(cs, best_flat), best_idx, best_gamma


def random_baseline(cs: ChannelSet, codebook: np.ndarray,
                    rng: np.random.Generator) -> tuple:
    """Uniform random phases (per RIS, in order) and codebook index."""
    phase_list = [rng.integers(0, 2, size=h2.shape[0]) * 2.0 - 1.0
                  for h2 in cs.h2_list]
    idx = int(rng.integers(codebook.shape[1]))
    phases = phase_list[0] if cs.ris_count == 1 else phase_list
    return phases, idx
