"""Recognizing reaching movements while they are being executed.

Four ProMPs are learnt from 100 synthetic reaches (25 per target).  Each of
the 100 test reaches is then streamed sample by sample; after every sample
the most likely movement and the most likely phase are reported.
"""

import numpy as np

from _common import out_dir, save
from betapromp import data, promp, recognition
from betapromp.basis import BasisConfig

out = out_dir(__doc__.splitlines()[0])
train, test = data.gen_reaching(data.BenchmarkSpec(seed=0))
fits = promp.fit_library(train, BasisConfig())
for label, f in fits.items():
    d = np.array([[p.delta1, p.delta2] for p in f.alignment.profiles])
    print(f"{label}: {len(f.demonstrations)} demos, delta1 in [{d[:, 0].min():+.2f}, {d[:, 0].max():+.2f}], "
          f"delta2 in [{d[:, 1].min():+.2f}, {d[:, 1].max():+.2f}]")

lib = recognition.MovementLibrary([f.model for f in fits.values()])
traces = [recognition.classify_stream(lib, recognition.trajectory_observations(t)) for t in test]
times, active, acc = recognition.accuracy_over_time(traces, [t.label for t in test], 0.01)
for frac in (0.1, 0.25, 0.5, 1.0):
    hits = [tr.labels_over_time[min(int(frac * len(tr.times)), len(tr.times) - 1)] == t.label
            for tr, t in zip(traces, test)]
    print(f"accuracy after {frac:>4.0%} of the movement: {np.mean(hits):.0%}")
save(out / "reaching_accuracy.csv", ["t", "n_active", "accuracy"], [times, active, acc])

# MAP phase on normalized time, one column per trial plus the average
u = np.linspace(0, 1, 101)
curves = np.stack([np.interp(u, np.linspace(0, 1, len(tr.times)), tr.phase_map_over_time) for tr in traces])
wobbly = sum(bool(np.any(np.diff(tr.phase_map_over_time) < 0)) for tr in traces)
print(f"average MAP phase goes {curves.mean(axis=0)[0]:.2f} -> {curves.mean(axis=0)[-1]:.2f}; "
      f"{wobbly} single trials step backwards at least once")
save(out / "reaching_map_phase.csv", ["u", "mean", *[f"trial{i}" for i in range(10)]], [u, curves.mean(axis=0), *curves[:10]])
recognition.export_traces(out / "reaching_traces.csv", traces[:8])
print(f"  wrote {out / 'reaching_traces.csv'}")
