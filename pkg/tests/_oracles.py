"""Independent reference computations used by the tests.

Nothing here calls into the code paths it checks: partial traces are dense
tensor contractions, descendants come from deleting symbols out of every
sequence, and codewords are built by brute-force enumeration of Z_ell^n.
"""

import itertools
import math

import numpy as np


def dense_vector(amplitudes, dims):
    """Dense vector with position 1 as the least significant digit."""
    out = np.zeros(math.prod(dims), complex)
    for x, a in amplitudes.items():
        idx, stride = 0, 1
        for s, d in zip(x, dims):
            idx += s * stride
            stride *= d
        out[idx] += a
    return out


def dense_partial_trace(vec, dims, keep):
    """Reduced density matrix on ``keep`` (1-based) by explicit contraction."""
    n = len(dims)
    T = np.asarray(vec).reshape(tuple(reversed(dims)))
    T = np.transpose(T, tuple(reversed(range(n))))  # axis i <-> position i+1
    traced = [i for i in range(n) if i + 1 not in keep]
    kept = [i for i in range(n) if i + 1 in keep]
    rho = np.tensordot(T, T.conj(), axes=(traced, traced))
    k = len(kept)
    # axes are (kept..., kept'...) in position order; flatten little-endian
    rho = np.transpose(rho, tuple(reversed(range(k))) + tuple(k + i for i in reversed(range(k))))
    dk = math.prod(dims[i] for i in kept)
    return rho.reshape(dk, dk)


def brute_descendants(counts, t):
    """Types of all subsequences left after deleting ``t`` components."""
    ell = len(counts)
    symbols = [a for a, c in enumerate(counts) for _ in range(c)]
    out = set()
    for x in set(itertools.permutations(symbols)):
        for drop in itertools.combinations(range(len(x)), t):
            y = [s for i, s in enumerate(x) if i not in drop]
            out.add(tuple(y.count(a) for a in range(ell)))
    return out


def brute_codeword(classes, ell, n):
    """Uniform superposition over every x in Z_ell^n whose sorted counts match a class."""
    targets = {tuple(sorted(c, reverse=True)) for c in classes}
    support = [
        x for x in itertools.product(range(ell), repeat=n)
        if tuple(sorted((x.count(a) for a in range(ell)), reverse=True)) in targets
    ]
    amp = 1 / math.sqrt(len(support))
    return {x: amp for x in support}


def random_sparse_amplitudes(rng, dims, density=0.3):
    total = math.prod(dims)
    k = max(1, int(density * total))
    idx = rng.choice(total, size=k, replace=False)
    amps = rng.normal(size=k) + 1j * rng.normal(size=k)
    amps /= np.linalg.norm(amps)
    out = {}
    for i, a in zip(idx, amps):
        x, r = [], int(i)
        for d in dims:
            x.append(r % d)
            r //= d
        out[tuple(x)] = complex(a)
    return out


def haar(rng, M):
    v = rng.normal(size=M) + 1j * rng.normal(size=M)
    return v / np.linalg.norm(v)


def descendant_table(n, ell, t):
    """Map each type of length n to the types reachable by deleting t symbols.

    Built by running over every sequence in Z_ell^n and every deletion set.
    """
    table = {}
    for x in itertools.product(range(ell), repeat=n):
        p = tuple(x.count(a) for a in range(ell))
        seen = table.setdefault(p, set())
        for drop in itertools.combinations(range(n), t):
            y = [s for i, s in enumerate(x) if i not in drop]
            seen.add(tuple(y.count(a) for a in range(ell)))
    return table
