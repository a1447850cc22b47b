"""CSV export of exact value tables and stationary marginals.

Both files share the columns s,a,z,value: value-table rows leave z
empty; marginal rows carry one value per (return, state, action).
"""

from __future__ import annotations

import csv

import numpy as np

from .stationary import ReturnConditionals


def write_q_csv(path, q: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "a", "z", "value"])
        for s in range(q.shape[0]):
            for a in range(q.shape[1]):
                w.writerow([s, a, "", repr(float(q[s, a]))])


def write_marginals_csv(path, cond: ReturnConditionals) -> None:
    """One row per (s, a, z): the conditional probability of the window
    return z given the pair, where the pair has stationary support."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "a", "z", "value"])
        n_z, n_s, n_a = cond.z_given_sa.shape
        for s in range(n_s):
            for a in range(n_a):
                if not cond.defined[s, a]:
                    continue
                for k in range(n_z):
                    w.writerow([s, a, repr(float(cond.z_values[k])),
                                repr(float(cond.z_given_sa[k, s, a]))])
