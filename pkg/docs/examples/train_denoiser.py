"""Train a small range-Doppler denoiser in memory and compare it with zeroing.

A few minutes on one core; pass fewer epochs for a quicker look:

    python docs/examples/train_denoiser.py [epochs]
"""
import sys

import numpy as np

from fmcw_rdd import DESK_CONFIG, ArchitectureSpec, ca_cfar, init_model, param_count, rd_map, sample_scenario, simulate, sinr, zeroing
from fmcw_rdd.radar_sim import DESK_BOUNDS
from fmcw_rdd.training import PairSet, TrainConfig, denoise_map, train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 40
cfg = DESK_CONFIG


def frames(seeds):
    out = []
    for s in seeds:
        pair = simulate(cfg, sample_scenario(s, cfg, DESK_BOUNDS))
        clean = rd_map(pair.clean.data)
        out.append((rd_map(pair.interfered.data), clean, ca_cfar(np.abs(clean) ** 2), pair.interfered))
    return out


train_set, val_set, test_set = frames(range(120)), frames(range(500, 520)), frames(range(900, 940))
to_pairs = lambda fs: PairSet.from_maps([f[0] for f in fs], [f[1] for f in fs], [f[2] for f in fs])

arch = ArchitectureSpec((8, 8, 2))
print(f"training {arch} ({param_count(arch)} parameters) for up to {epochs} epochs")
result = train(init_model(arch, seed=0), to_pairs(train_set), to_pairs(val_set), TrainConfig(lr=1e-2, epochs=epochs, patience=epochs))
print(f"best epoch {result.best_epoch}, val MSE {result.history[result.best_epoch]['val_loss']:.3g}")

scores = {"interfered": [], "zeroing": [], "cnn": [], "clean": []}
for interfered, clean, peaks, frame in test_set:
    if not peaks:
        continue
    scores["interfered"].append(sinr(interfered, peaks))
    scores["zeroing"].append(sinr(rd_map(zeroing(frame).data), peaks))
    scores["cnn"].append(sinr(denoise_map(result.model, interfered), peaks))
    scores["clean"].append(sinr(clean, peaks))
for name, vals in scores.items():
    print(f"  {name:10s} median SINR {np.median(vals):6.2f} dB  mean {np.mean(vals):6.2f} dB")
