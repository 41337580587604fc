r"""
Multimode thermal photon statistics
-----------------------------------
How the photon-number distribution of one arm of a twin beam depends on the
number of modes, and what Bernoulli detection does to it.

The photon number of a multimode thermal field with mean ``N`` spread over
``mu`` equally populated modes is negative binomial. With ``mu = 1`` it is
the geometric (single-mode thermal) law; as ``mu`` grows it approaches a
Poisson law with the same mean.
"""
import numpy as np

from twinbeam.photon_stats import binomial_thin, dist_stats, nb_dist, nb_pmf

#%%
# Build truncated distributions. ``eps`` bounds the probability mass left in
# the omitted tail; ``tail_bound`` reports what was actually left.
for mu in (1, 2, 10, 200):
    d = nb_dist(2.0, mu, eps=1e-12)
    s = dist_stats(d)
    print(f"mu={mu:>4}  n_max={d.n_max:>3}  tail<={d.tail_bound:.1e}  "
          f"mean={s.mean:.6f}  Fano={s.fano:.6f}  (1 + N/mu = {1 + 2.0 / mu:.6f})")

#%%
# The first few probabilities side by side: a single mode is heavily weighted
# towards vacuum, many modes concentrate the mass near the mean.
n = np.arange(7)
print("n    " + "  ".join(f"{k:>7d}" for k in n))
for mu in (1, 10, 200):
    print(f"mu={mu:<4}" + "  ".join(f"{p:7.4f}" for p in nb_pmf(n, 2.0, mu)))

#%%
# Detection with efficiency ``eta`` thins every photon independently. The
# negative binomial family is closed under thinning: the detected counts are
# again negative binomial, with mean ``eta * N`` and the same ``mu``.
photons = nb_dist(2.0, 10)
detected = binomial_thin(photons, 0.15)
direct = nb_pmf(np.arange(len(detected)), 0.15 * 2.0, 10)
print("max |thinned - NB(eta N, mu)| =", np.abs(detected.probs - direct).max())

#%%
# Loss drives any Fano factor towards 1: F_m = eta F_n + (1 - eta).
for eta in (1.0, 0.5, 0.15, 0.06):
    f = dist_stats(binomial_thin(nb_dist(2.0, 2), eta)).fano
    print(f"eta={eta:<5}  detected Fano={f:.4f}  eta*F_n+1-eta={eta * 2.0 + 1 - eta:.4f}")
