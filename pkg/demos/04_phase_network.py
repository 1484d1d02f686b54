"""Replacing the phase integral with a learnt phase estimate.

A 40-20-10 network reads the current time and the 20 latest samples and
predicts the phase.  Recognition then scores each movement at that single
phase.  Its accuracy is compared with the integrating classifier.
"""

import time

import numpy as np

from _common import out_dir, save
from betapromp import data, perception, promp, recognition
from betapromp.basis import BasisConfig

out = out_dir(__doc__.splitlines()[0])
train, test = data.gen_reaching(data.BenchmarkSpec(seed=0))
fits = promp.fit_library(train, BasisConfig())
demos = [d for f in fits.values() for d in f.demonstrations]
pairs = perception.build_training_pairs(demos, 20)
start = time.perf_counter()
net = perception.train(pairs, perception.PhaseNetConfig())
print(f"{pairs[1].size} training pairs, {time.perf_counter() - start:.1f} s, training RMSE {perception.rmse(net, pairs):.4f}")

lib = recognition.MovementLibrary([f.model for f in fits.values()])
labels = [t.label for t in test]
by_net = [perception.classify_with_phase_estimate(lib, recognition.trajectory_observations(t), net) for t in test]
by_int = [recognition.classify_stream(lib, recognition.trajectory_observations(t)) for t in test]
times, _, acc_net = recognition.accuracy_over_time(by_net, labels, 0.01)
_, _, acc_int = recognition.accuracy_over_time(by_int, labels, 0.01)
print(f"final accuracy: network {np.mean([t.final_label == l for t, l in zip(by_net, labels)]):.0%}, "
      f"integral {np.mean([t.final_label == l for t, l in zip(by_int, labels)]):.0%}")
save(out / "phase_net_accuracy.csv", ["t", "acc_net", "acc_integral"], [times, acc_net, acc_int])

u = np.linspace(0, 1, 101)
curves = np.stack([np.interp(u, np.linspace(0, 1, len(t)), perception.stream_phase(net, t.times, t.samples)) for t in test])
save(out / "phase_net_estimates.csv", ["u", "mean", *[f"trial{i}" for i in range(10)]], [u, curves.mean(axis=0), *curves[:10]])
