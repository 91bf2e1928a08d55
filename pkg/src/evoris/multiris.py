"""Distributed control of several RIS by agents sharing one policy genome.

Every surface runs the same attention-convolutional policy on its local
channel view (direct link, own TX-RIS matrix, own RIS-RX vector), keeps the
phase output, and sends only its argmax precoder index as a vote.  A small
receiver-side network turns the K votes into the final precoder.  The joint
genome is the concatenation of the shared policy weights and the aggregator
weights, trained as one vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelSet, ScenarioConfig, sample_channel_set
from .numerics import relu, softmax_global
from .policy import ArchConfig, GenomeLayout, forward, genome_layout
from .system import evaluation_codebook, link_budget_from, snr


@dataclass(frozen=True)
class AggregatorConfig:
    """Receiver-side vote-to-precoder network shapes.

    ``encoding`` is "one-hot" (K blocks of |V| indicator inputs, default) or
    "index" (K raw integer votes).
    """

    ris_count: int
    codebook_size: int
    hidden: int = 16
    encoding: str = "one-hot"

    def __post_init__(self):
        if self.ris_count < 1 or self.codebook_size < 1:
            raise ValueError("ris_count and codebook_size must be >= 1")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.encoding not in ("one-hot", "index"):
            raise ValueError(f"unknown vote encoding {self.encoding!r}")

    @property
    def input_size(self) -> int:
        if self.encoding == "one-hot":
            return self.ris_count * self.codebook_size
        return self.ris_count

    @property
    def genome_size(self) -> int:
        return aggregator_layout(self).size


@lru_cache(maxsize=None)
def aggregator_layout(cfg: AggregatorConfig) -> GenomeLayout:
    return GenomeLayout([
        ("agg0.w", (cfg.input_size, cfg.hidden)), ("agg0.b", (cfg.hidden,)),
        ("agg1.w", (cfg.hidden, cfg.codebook_size)), ("agg1.b", (cfg.codebook_size,)),
    ])


def encode_votes(votes, cfg: AggregatorConfig) -> np.ndarray:
    """Vote vector to network input under the configured encoding."""
    votes = np.asarray(votes, dtype=np.int64)
    if votes.shape != (cfg.ris_count,):
        raise ValueError(f"expected {cfg.ris_count} votes, got shape {votes.shape}")
    if np.any(votes < 0) or np.any(votes >= cfg.codebook_size):
        raise ValueError(f"votes must lie in [0, {cfg.codebook_size})")
    if cfg.encoding == "index":
        return votes.astype(np.float64)
    x = np.zeros(cfg.ris_count * cfg.codebook_size)
    x[np.arange(cfg.ris_count) * cfg.codebook_size + votes] = 1.0
    return x


def agent_act(values: np.ndarray, arch: ArchConfig, h: np.ndarray,
              h1_k: np.ndarray, h2_k: np.ndarray):
    """One agent's local decision: its phase vector plus an argmax vote.

    Votes are deterministic by construction (argmax of the precoder probs,
    lowest index on ties), so agents never need a sampling stream.
    """
    out = forward(values, arch, h, h1_k, h2_k, mode="argmax")
    return out.phases, out.precoder_index


def aggregate_precoder(values_g5: np.ndarray, cfg: AggregatorConfig, votes,
                       rng=None, mode: str = "sample"):
    """Final precoder distribution and pick from the K votes."""
    values_g5 = np.asarray(values_g5, dtype=np.float64).reshape(-1)
    layout = aggregator_layout(cfg)
    if values_g5.size != layout.size:
        raise ValueError(f"aggregator genome has {values_g5.size} values, "
                         f"needs {layout.size}")
    x = encode_votes(votes, cfg)
    hid = relu(x @ layout.view(values_g5, "agg0.w") + layout.view(values_g5, "agg0.b"))
    logits = hid @ layout.view(values_g5, "agg1.w") + layout.view(values_g5, "agg1.b")
    probs = softmax_global(logits)
    if mode == "argmax":
        idx = int(np.argmax(probs))
    elif mode == "sample":
        if rng is None:
            raise ValueError("sampling mode needs an rng")
        idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
        idx = min(idx, probs.size - 1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return idx, probs


def split_joint_genome(values: np.ndarray, arch: ArchConfig,
                       agg_cfg: AggregatorConfig | None):
    """Split the concatenated (policy, aggregator) genome into its parts."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    n_policy = genome_layout(arch).size
    n_total = n_policy + (agg_cfg.genome_size if agg_cfg is not None else 0)
    if values.size != n_total:
        raise ValueError(f"joint genome has {values.size} values, needs {n_total}")
    if agg_cfg is None:
        return values, None
    return values[:n_policy], values[n_policy:]


def evaluate_fitness_multi(values: np.ndarray, arch: ArchConfig,
                           agg_cfg: AggregatorConfig | None,
                           scenario: ScenarioConfig, t: int, t_e: int, rng=None, *,
                           policy_rng=None, mode: str = "sample",
                           aggregator: str = "network", trace=None) -> float:
    """Mean per-step SNR of the joint multi-RIS genome.

    Per step every agent acts on its local channels; with the "network"
    aggregator the argmax votes feed the receiver-side net whose output is
    sampled (or argmaxed) into the final precoder.  The "bypass" mode,
    valid only for a single surface, passes the lone agent's own
    mode-selected precoder straight through, which reduces the rollout to
    the single-RIS evaluator exactly.
    """
    if aggregator not in ("network", "bypass"):
        raise ValueError(f"unknown aggregator mode {aggregator!r}")
    if aggregator == "bypass":
        if scenario.ris_count != 1:
            raise ValueError("aggregator bypass requires exactly one RIS")
        if agg_cfg is not None:
            raise ValueError("bypass mode takes no aggregator config")
    elif agg_cfg is None:
        raise ValueError("network aggregation needs an AggregatorConfig")
    if trace is None and rng is None:
        raise ValueError("need an rng when no channel trace is given")
    sel_rng = policy_rng if policy_rng is not None else rng

    g14, g5 = split_joint_genome(values, arch, agg_cfg)
    budget = link_budget_from(scenario)
    codebook = evaluation_codebook(scenario, arch.codebook_size)
    if agg_cfg is not None and agg_cfg.codebook_size != arch.codebook_size:
        raise ValueError("aggregator and policy codebook sizes must agree")
    if agg_cfg is not None and agg_cfg.ris_count != scenario.ris_count:
        raise ValueError("aggregator ris_count must match the scenario")

    def step(cs: ChannelSet) -> float:
        if aggregator == "bypass":
            out = forward(g14, arch, cs.h, cs.h1_list[0], cs.h2_list[0],
                          rng=sel_rng, mode=mode)
            return snr(cs, out.phases, codebook[:, out.precoder_index], budget,
                       arch.phase_states)
        phase_list = []
        votes = []
        for k in range(cs.ris_count):
            phases_k, vote_k = agent_act(g14, arch, cs.h, cs.h1_list[k],
                                         cs.h2_list[k])
            phase_list.append(phases_k)
            votes.append(vote_k)
        idx, _ = aggregate_precoder(g5, agg_cfg, votes, sel_rng, mode)
        return snr(cs, phase_list, codebook[:, idx], budget, arch.phase_states)

    total = 0.0
    count = 0
    if trace is not None:
        for episode in trace:
            for cs in episode:
                total += step(cs)
                count += 1
    else:
        if t < 1 or t_e < 1:
            raise ValueError("t and t_e must be >= 1")
        for _ in range(t_e):
            for _ in range(t):
                total += step(sample_channel_set(scenario, rng))
                count += 1
    if count == 0:
        raise ValueError("the channel trace is empty")
    return total / count


@dataclass(frozen=True)
class OverheadRecord:
    """Per-coherence-block message counts for one operating mode and phase."""

    mode: str
    phase: str
    scalars_up: int
    scalars_down: int
    bits_votes: int
    bits_phases: int
    weight_broadcast_scalars: int


def message_accounting(scenario: ScenarioConfig, phase: str, codebook_size: int,
                       genome_size: int = 0,
                       mode: str = "distributed") -> OverheadRecord:
    """Count the control traffic one coherence block costs.

    Distributed operation: the receiver broadcasts the direct channel
    (2*n_tx real scalars) and each of the K agents uplinks one vote of
    ceil(log2 |V|) bits; training additionally broadcasts the genome before
    every fitness evaluation.  Centralized operation instead uplinks the
    full CSI and downlinks K binary phase vectors of n_ris bits each.
    """
    if phase not in ("training", "deployment"):
        raise ValueError(f"unknown phase {phase!r}")
    if mode not in ("distributed", "centralized"):
        raise ValueError(f"unknown mode {mode!r}")
    if codebook_size < 1:
        raise ValueError("codebook_size must be >= 1")
    k = scenario.ris_count
    if mode == "distributed":
        return OverheadRecord(
            mode=mode, phase=phase,
            scalars_up=0,
            scalars_down=2 * scenario.n_tx,
            bits_votes=k * math.ceil(math.log2(codebook_size)),
            bits_phases=0,
            weight_broadcast_scalars=genome_size if phase == "training" else 0)
    csi = 2 * scenario.n_tx * scenario.n_ris * k + 2 * scenario.n_ris * k \
        + 2 * scenario.n_tx
    return OverheadRecord(mode=mode, phase=phase, scalars_up=csi, scalars_down=0,
                          bits_votes=0, bits_phases=k * scenario.n_ris,
                          weight_broadcast_scalars=0)
