"""Independent constructions used as test oracles.

They build dense matrices on the full space d^n straight from the formulas, without the
support-basis machinery of the package.
"""

import itertools

import numpy as np

from phasedicke.basis import content_of, enumerate_type_class, full_basis


def ket(d, s):
    v = np.zeros(d)
    v[s] = 1.0
    return v


def dense_pair_test(k, d, i, j):
    """Σ_s Z̄(k−2e_s)⊗|ss⟩⟨ss| + Σ_{s<t} Z̄(k−e_s−e_t)⊗(T⁺⊗T⁺ + T⁻⊗T⁻) on (C^d)^{⊗n}."""
    parts = tuple(k.parts) + (0,) * (d - len(k.parts))
    n = k.n
    local = {}
    for s in range(d):
        for t in range(s, d):
            c = list(parts)
            c[s] -= 1
            c[t] -= 1
            if min(c) < 0:
                continue
            if s == t:
                x = np.kron(ket(d, s), ket(d, s))
                op = np.outer(x, x)
            else:
                plus = (ket(d, s) + ket(d, t)) / np.sqrt(2)
                minus = (ket(d, s) - ket(d, t)) / np.sqrt(2)
                tp, tm = np.outer(plus, plus), np.outer(minus, minus)
                op = np.kron(tp, tp) + np.kron(tm, tm)
            local[tuple(c)] = op
    basis = full_basis(n, d)
    index = {u: a for a, u in enumerate(basis)}
    m = np.zeros((len(basis), len(basis)))
    rest_parties = [p for p in range(n) if p not in (i, j)]
    for u in basis:
        rest = tuple(u[p] for p in rest_parties)
        op = local.get(content_of(rest, d))
        if op is None:
            continue
        row = u[i] * d + u[j]
        for a, b in itertools.product(range(d), repeat=2):
            val = op[row, a * d + b]
            if val:
                v = list(u)
                v[i], v[j] = a, b
                m[index[u], index[tuple(v)]] += val
    return basis, m


def dense_uniform_pair_strategy(k, d):
    n = k.n
    pairs = list(itertools.combinations(range(n), 2))
    basis = None
    total = 0
    for i, j in pairs:
        basis, m = dense_pair_test(k, d, i, j)
        total = total + m
    return basis, total / len(pairs)


def differ_in_two(u, v):
    return sum(1 for a, b in zip(u, v) if a != b) == 2


def block_decomposition(k):
    """Blocks [M₁/(n(n−1)), M_(s,t)/(n(n−1)) for s<t] of the uniform pair strategy, as (basis, matrix)."""
    parts = k.parts
    n = k.n
    d = len(parts)
    norm = n * (n - 1)
    out = []
    cls = enumerate_type_class(parts, d)
    m1 = 0.5 * (n * n - 2 * n + sum(x * x for x in parts)) * np.eye(len(cls))
    m1 += np.array([[1.0 if differ_in_two(u, v) else 0.0 for v in cls] for u in cls])
    out.append((cls, m1 / norm))
    for s, t in itertools.combinations(range(d), 2):
        up = list(parts)
        up[s] += 1
        up[t] -= 1
        down = list(parts)
        down[s] -= 1
        down[t] += 1
        bu = enumerate_type_class(tuple(up), d)
        bd = enumerate_type_class(tuple(down), d)
        basis = bu + bd
        m = np.zeros((len(basis), len(basis)))
        m[: len(bu), : len(bu)] = parts[s] * (parts[s] + 1) / 2 * np.eye(len(bu))
        m[len(bu):, len(bu):] = parts[t] * (parts[t] + 1) / 2 * np.eye(len(bd))
        for a, u in enumerate(bu):
            for b, v in enumerate(bd):
                if differ_in_two(u, v):
                    m[a, len(bu) + b] = m[len(bu) + b, a] = 1.0
        out.append((basis, m / norm))
    return out


def random_density(dim, rng, rank=None):
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
