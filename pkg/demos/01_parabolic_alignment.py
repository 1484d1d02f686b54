"""Aligning arches of random speed, then fitting and conditioning a ProMP on them.

A hundred planar arches share one shape but are run at random speeds with
random start/end timing.  Compared at equal normalized time they look
smeared; compared at equal phase after alignment they collapse onto a
family of translates.  The fitted model is then conditioned to pass through
one and then two via-points.
"""

import numpy as np

from _common import out_dir, save
from betapromp import data, promp
from betapromp.basis import BasisConfig
from betapromp.phase import align, resample_in_phase

out = out_dir(__doc__.splitlines()[0])
trs = data.gen_parabolic(100, seed=0)
durations = [t.duration for t in trs]
print(f"{len(trs)} arches, durations {min(durations):.2f}-{max(durations):.2f} s")

basis = BasisConfig()
res = align(trs, basis)
print(f"alignment: {res.iterations} sweeps, objective {res.trace[0]:.4g} -> {res.final_objective:.4g}")

grid = res.phase_grid
in_phase = np.stack([resample_in_phase(t, p, grid) for t, p in zip(trs, res.profiles)])
in_time = np.stack([t.samples[np.round(grid * (len(t) - 1)).astype(int)] for t in trs])
v_phase = in_phase[..., 1].var(axis=0)
v_time = in_time[..., 1].var(axis=0)
print(f"variance of y across trials: {v_time.mean():.4f} by time, {v_phase.mean():.4f} by phase")
save(out / "parabolic_variance.csv", ["phase", "var_time", "var_phase"], [grid, v_time, v_phase])

# phase profiles of every trial on a common time axis (with their average)
t = np.arange(0, max(durations) + 1e-9, 0.01)
profiles = np.stack([np.where(t > p.duration, 1.0, p.phase(t)) for p in res.profiles])
save(out / "parabolic_phase_profiles.csv", ["t", "mean", *[f"trial{i}" for i in range(10)]],
     [t, profiles.mean(axis=0), *profiles[:10]])

model = promp.fit(trs, basis).model
mean = model.mean_at(grid)
sd = np.sqrt(np.einsum("gij,jk,gik->gi", model.observation_matrices(grid), model.sigma_w,
                       model.observation_matrices(grid)))
save(out / "parabolic_model.csv", ["phase", "x", "y", "sd_x", "sd_y"], [grid, mean, sd])

# one via-point above the arch top, then a second one that bends the tail
one = promp.condition(model, 0.5, [0.5, 1.6])
two = promp.condition(one, 0.8, [0.8, 0.9])
for name, m in (("one_via", one), ("two_via", two)):
    W = promp.sample_weights(m, 10, np.random.default_rng(1))
    ys = np.einsum("gdk,nk->ngd", m.observation_matrices(grid), W)
    print(f"{name}: trace(Sigma_w) {np.trace(model.sigma_w):.3g} -> {np.trace(m.sigma_w):.3g}")
    save(out / f"parabolic_{name}.csv", ["phase", *[f"s{i}_{c}" for i in range(10) for c in "xy"]],
         [grid, ys.transpose(1, 0, 2).reshape(len(grid), -1)])
