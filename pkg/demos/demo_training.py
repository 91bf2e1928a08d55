"""Evolve the attention policy on a desk-scale link and score it.

Trains for a dozen generations (about ten seconds), prints the fitness
history, then compares the evolved genome against the random, genetic,
and exhaustive-search baselines on a common evaluation trace.  Run from
the repository root:

    python3 demos/demo_training.py
"""

import time

import numpy as np

from evoris.baselines import (LgaParams, exhaustive_oracle, lga_solve,
                              random_baseline)
from evoris.channel import ScenarioConfig, sample_episodes
from evoris.cosyne import EvoParams, evaluate_fitness, train
from evoris.numerics import derive_rng, make_rng
from evoris.policy import ArchConfig
from evoris.system import evaluation_codebook, link_budget_from, snr

SEED = 0

scn = ScenarioConfig(n_tx=4, n_ris=16, horizon=20, episodes=4)
arch = ArchConfig(n_tx=4, n_ris=16, codebook_size=4)
params = EvoParams(l_pop=20, generations=12, t_e_train=2)

print(f"scenario: {scn.n_tx} TX antennas, {scn.n_ris}-element surface, "
      f"horizon {scn.horizon}")
print(f"genome: {arch.genome_size} weights, population {params.l_pop}, "
      f"{params.generations} generations")
print()

t0 = time.perf_counter()
result = train(scn, arch, params, seed=SEED)
print(f"trained in {time.perf_counter() - t0:.1f}s")
print()
print("generation   best fitness   mean fitness")
for row in result.history[:: max(1, len(result.history) // 6)]:
    print(f"{row['generation']:10d}   {row['best_fitness']:12.4f}   "
          f"{row['mean_fitness']:12.4f}")
print()

# score everything on one shared evaluation trace (fresh seed namespace,
# disjoint from the training episodes)
eval_trace = sample_episodes(scn, 4, scn.horizon, derive_rng(SEED, "eval"))
budget = link_budget_from(scn)
codebook = evaluation_codebook(scn, arch.codebook_size)

evolved = evaluate_fitness(result.best_genome, arch, scn, 0, 0,
                           mode="argmax", trace=eval_trace)

rng = make_rng(1)
sums = {"random": 0.0, "genetic": 0.0, "oracle": 0.0}
steps = 0
for episode in eval_trace:
    for cs in episode:
        phases, idx = random_baseline(cs, codebook, rng)
        sums["random"] += snr(cs, phases, codebook[:, idx], budget)
        res = lga_solve(cs, budget, codebook,
                        LgaParams(individuals=10, generations=4), rng)
        sums["genetic"] += res.gamma
        sums["oracle"] += exhaustive_oracle(cs, budget, codebook)[2]
        steps += 1

print("mean SNR over the shared evaluation trace:")
print(f"  random baseline    {10 * np.log10(sums['random'] / steps):7.2f} dB")
print(f"  genetic baseline   {10 * np.log10(sums['genetic'] / steps):7.2f} dB "
      "(per-block search)")
print(f"  evolved attention  {10 * np.log10(evolved):7.2f} dB "
      "(single forward pass per block)")
print(f"  exhaustive oracle  {10 * np.log10(sums['oracle'] / steps):7.2f} dB "
      "(upper bound)")
