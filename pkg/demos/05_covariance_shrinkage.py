"""How much of the demonstrations' spread is only timing.

Eleven 7-joint demonstrations pass through one pick-up pose at mid-movement
but at different speeds.  Fitting 63 weights with and without phase
alignment shows how much of the weight covariance timing alone accounts for.
"""

import numpy as np

from _common import out_dir, save
from betapromp import data, promp
from betapromp.basis import BasisConfig
from betapromp.phase import AlignOptions

out = out_dir(__doc__.splitlines()[0])
trs = data.gen_jointspace()
basis = BasisConfig()
aligned = promp.fit(trs, basis).model.sigma_w
plain = promp.fit(trs, basis, AlignOptions(method="reference")).model.sigma_w
print(f"{len(trs)} demonstrations, {aligned.shape[0]} weights")
print(f"trace(Sigma_w): aligned {np.trace(aligned):.4g}, unaligned {np.trace(plain):.4g}")
smaller = np.mean(np.abs(aligned) <= np.abs(plain))
print(f"{smaller:.0%} of covariance entries are smaller in magnitude after alignment")
ea, eu = np.linalg.eigvalsh(aligned)[::-1], np.linalg.eigvalsh(plain)[::-1]
save(out / "cov_eigenvalues.csv", ["index", "aligned", "unaligned"], [np.arange(ea.size), ea, eu])
np.savetxt(out / "cov_aligned.csv", aligned, delimiter=",", fmt="%.10g")
np.savetxt(out / "cov_unaligned.csv", plain, delimiter=",", fmt="%.10g")
print(f"  wrote {out / 'cov_aligned.csv'} and {out / 'cov_unaligned.csv'}")
