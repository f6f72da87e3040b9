"""Central finite-difference checks for tape gradients."""

import numpy as np

from nffsim.nn import Tape

EPS = 1e-5
FLOOR = 1e-6


def relative_errors(fn, tree, n_samples=None, seed=0):
    """Worst relative error per entry of ``tree`` for the scalar ``fn(vars) -> Var``.

    Entries are probed exhaustively unless ``n_samples`` caps the count per array.
    """
    tape = Tape()
    leaves = tape.watch(tree)
    out = fn(leaves)
    grads = tape.backward(out)
    rng = np.random.default_rng(seed)
    worst = {}
    for name, arr in tree.items():
        g = grads[leaves[name]]
        flat = np.arange(arr.size)
        if n_samples is not None and arr.size > n_samples:
            flat = rng.choice(arr.size, n_samples, replace=False)
        err = 0.0
        for i in flat:
            idx = np.unravel_index(i, arr.shape)
            vals = []
            for sign in (1.0, -1.0):
                probe = {k: np.array(v, dtype=np.float64) for k, v in tree.items()}
                probe[name][idx] += sign * EPS
                vals.append(float(fn(Tape().watch(probe)).value))
            num = (vals[0] - vals[1]) / (2 * EPS)
            ana = float(g[idx])
            err = max(err, abs(num - ana) / max(abs(num), abs(ana), FLOOR))
        worst[name] = err
    return worst
