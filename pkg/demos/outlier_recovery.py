"""Recover a sparse vector from measurements hit by a few gross outliers.

Compares the standard RVM, the augmented robust RVM and the two SD-RVM
noise models on one random instance.
"""

import numpy as np

from sdrvm import LinearSystem, fit_rbrvm, fit_rvm, fit_sdrvm, fit_sdrvm_sparse_dense

rng = np.random.default_rng(0)
n, m = 100, 70
A = rng.standard_normal((m, n))
A /= np.linalg.norm(A, axis=0)

x = np.zeros(n)
x[rng.choice(n, 10, replace=False)] = rng.standard_normal(10)
y = A @ x + np.sqrt(10 / (m * 100)) * rng.standard_normal(m)
bad = rng.choice(m, 4, replace=False)
y[bad] += rng.standard_normal(4)

system = LinearSystem(A, y)


def err_db(x_hat):
    return 10 * np.log10(np.sum((x_hat - x) ** 2) / np.sum(x ** 2))


post, rep = fit_rvm(system)
print(f"RVM              {err_db(post.x_hat):7.2f} dB  {rep.iterations:4d} it")

aug, rep = fit_rbrvm(system)
print(f"RB-RVM           {err_db(aug.x_hat):7.2f} dB  {rep.iterations:4d} it")

post, state, rep = fit_sdrvm(system)
print(f"SD-RVM           {err_db(post.x_hat):7.2f} dB  {rep.iterations:4d} it")

post, state, rep = fit_sdrvm_sparse_dense(system)
print(f"SD-RVM (s+d)     {err_db(post.x_hat):7.2f} dB  {rep.iterations:4d} it")

# samples whose combined noise precision collapsed are the flagged outliers
flagged = np.argsort(state.beta)[:len(bad)]
print("true outliers   ", np.sort(bad))
print("lowest precision", np.sort(flagged))
