"""Trace one forward pass of the attention-convolutional policy.

Shows how complex channels become real token matrices, what each branch
produces, and how the two heads turn features into a phase configuration
and a precoder choice.  Run from the repository root:

    python3 demos/demo_policy_forward.py
"""

import numpy as np

from evoris.channel import ScenarioConfig, sample_channel_set
from evoris.numerics import make_rng
from evoris.policy import (ArchConfig, attention_branch, forward,
                           genome_layout, merge_branches)

rng = make_rng(0)
scn = ScenarioConfig(n_tx=4, n_ris=16, horizon=5, episodes=2)
arch = ArchConfig(n_tx=4, n_ris=16, codebook_size=4)

print("=== genome layout ===")
layout = genome_layout(arch)
for name, (offset, shape) in layout.segments.items():
    print(f"  {name:16s} offset {offset:6d}  shape {shape}")
print(f"total weights: {layout.size}")
full = ArchConfig(n_tx=16, n_ris=400, codebook_size=16)
print(f"(at n_tx=16, n_ris=400, codebook 16 the same layout holds "
      f"{full.genome_size} weights)")

print()
print("=== tokens and attention branches ===")
cs = sample_channel_set(scn, rng)
h1, h2 = cs.h1_list[0], cs.h2_list[0]
tokens_tx_ris = np.concatenate([h1.real, h1.imag], axis=0).T  # (n_ris, 2 n_tx)
tokens_ris_rx = np.stack([h2.real, h2.imag], axis=1)          # (n_ris, 2)
print("TX-to-surface tokens:", tokens_tx_ris.shape,
      " surface-to-RX tokens:", tokens_ris_rx.shape)
w = rng.standard_normal(arch.genome_size) * 0.3
a1, scores = attention_branch(tokens_tx_ris,
                              layout.view(w, "attn_tx_ris.wq"),
                              layout.view(w, "attn_tx_ris.wk"),
                              layout.view(w, "attn_tx_ris.wv"),
                              return_scores=True)
print("branch output keeps the token shape:", a1.shape)
print(f"attention scores: {scores.shape}, all positive, "
      f"sum = {scores.sum():.12f}")

print()
print("=== full forward pass ===")
out = forward(w, arch, cs.h, h1, h2, rng=rng, mode="sample")
print("phases (one per surface element):")
print(" ", out.phases.astype(int))
print("precoder probabilities:", np.round(out.precoder_probs, 3),
      "-> sampled index", out.precoder_index)
det = forward(w, arch, cs.h, h1, h2, mode="argmax")
print("argmax mode is deterministic -> index", det.precoder_index,
      "(used at evaluation time)")

print()
print("=== why training matters ===")
# an untrained genome is bias-dominated: the channel moves the phase-head
# logits, but not enough to cross the sign boundary, so the decisions look
# frozen.  evolution has to pull those logits toward the boundary before
# the policy can react to fading.
scatter = ScenarioConfig(n_tx=4, n_ris=16, horizon=5, episodes=2,
                         kappa_h2_db=-10.0)


def merged_features(cs_i):
    t1 = np.concatenate([cs_i.h1_list[0].real, cs_i.h1_list[0].imag],
                        axis=0).T
    t2 = np.stack([cs_i.h2_list[0].real, cs_i.h2_list[0].imag], axis=1)
    b1 = attention_branch(t1, layout.view(w, "attn_tx_ris.wq"),
                          layout.view(w, "attn_tx_ris.wk"),
                          layout.view(w, "attn_tx_ris.wv"))
    b2 = attention_branch(t2, layout.view(w, "attn_ris_rx.wq"),
                          layout.view(w, "attn_ris_rx.wk"),
                          layout.view(w, "attn_ris_rx.wv"))
    return merge_branches(b1, b2)


base = merged_features(sample_channel_set(scatter, rng))
for i in range(3):
    delta = np.abs(merged_features(sample_channel_set(scatter, rng)) - base)
    print(f"draw {i}: merged features move by up to {delta.max():.1e} "
          "(nonzero, so the channel does reach the heads)")
print("see demo_training.py for what an evolved genome does with this signal")
