"""Test projectors and their adaptive local measurement trees.

Parties are 0-based here. A tree node lists orthogonal single-qudit projectors;
the remainder I − ΣΠ leads to `rest`, which defaults to a reject leaf, so every
tree is a total function on the outcome space.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence as Seq, Union

import numpy as np

from .basis import (
    PhaseFunction,
    PureState,
    Sequence,
    TypeVector,
    content_of,
    derived_type,
    dicke_state,
    antisymmetric_state,
    enumerate_type_class,
    full_basis,
    phased_dicke_state,
    seq_to_text,
    w_state,
)
from .errors import PreconditionError
from .linalg import HermitianOperator, embed_two_party, fixed_residual, insert_pair, sum_operators

TREE_TOL = 1e-10


# single-qudit building blocks

def ket(d: int, s: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[s] = 1
    return v


def rank1(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def z_projector(d: int, s: int) -> np.ndarray:
    return rank1(ket(d, s))


def t_projector(d: int, s: int, t: int, sign: int) -> np.ndarray:
    """½(|s⟩ ± |t⟩)(⟨s| ± ⟨t|)."""
    return rank1(ket(d, s) + sign * ket(d, t))


def t_tilde_projector(d: int, s: int, t: int, sign: int) -> np.ndarray:
    """½(|s⟩ ± i|t⟩)(⟨s| ∓ i⟨t|)."""
    return rank1(ket(d, s) + sign * 1j * ket(d, t))


def gamma_projector(d: int, s: int, t: int, theta: float, sign: int) -> np.ndarray:
    """½[|s⟩ ± e^{iθ/2}|t⟩][⟨s| ± e^{−iθ/2}⟨t|]."""
    return rank1(ket(d, s) + sign * np.exp(0.5j * theta) * ket(d, t))


X_PLUS = t_projector(2, 0, 1, +1)
X_MINUS = t_projector(2, 0, 1, -1)


# trees

@dataclass(frozen=True, eq=False)
class Leaf:
    accept: bool

    def __repr__(self) -> str:
        return "ACCEPT" if self.accept else "REJECT"


ACCEPT = Leaf(True)
REJECT = Leaf(False)


@dataclass(frozen=True, eq=False)
class Node:
    party: int
    outcomes: tuple[np.ndarray, ...]
    children: tuple["Tree", ...]
    rest: "Tree" = REJECT

    def __post_init__(self):
        outs = tuple(np.asarray(p, dtype=complex) for p in self.outcomes)
        object.__setattr__(self, "outcomes", outs)
        object.__setattr__(self, "children", tuple(self.children))
        if len(outs) != len(self.children):
            raise PreconditionError("each outcome needs exactly one child")
        check_outcomes(outs)

    @property
    def d(self) -> int:
        return self.outcomes[0].shape[0]

    def remainder(self) -> np.ndarray:
        return np.eye(self.d) - sum(self.outcomes)

    def branches(self) -> list[tuple[np.ndarray, "Tree"]]:
        """(projector, child) pairs including the remainder branch."""
        out = list(zip(self.outcomes, self.children))
        rem = self.remainder()
        if np.max(np.abs(rem)) > TREE_TOL:
            out.append((rem, self.rest))
        return out


Tree = Union[Node, Leaf]


def check_outcomes(outs: Seq[np.ndarray], tol: float = TREE_TOL) -> None:
    if not outs:
        raise PreconditionError("node without outcomes")
    d = outs[0].shape[0]
    for p in outs:
        if p.shape != (d, d):
            raise PreconditionError("outcome projectors must be square and equally sized")
        if np.max(np.abs(p - p.conj().T)) > tol or np.max(np.abs(p @ p - p)) > tol:
            raise PreconditionError("outcome is not an orthogonal projector")
    for a, b in itertools.combinations(outs, 2):
        if np.max(np.abs(a @ b)) > tol:
            raise PreconditionError("overlapping outcomes")


def validate_tree(tree: Tree, n: int, d: int, measured: frozenset = frozenset()) -> None:
    if isinstance(tree, Leaf):
        return
    if not 0 <= tree.party < n:
        raise PreconditionError(f"party {tree.party} out of range")
    if tree.party in measured:
        raise PreconditionError(f"party {tree.party} measured twice on one path")
    if tree.d != d:
        raise PreconditionError("outcome dimension differs from local dimension")
    check_outcomes(tree.outcomes)
    below = measured | {tree.party}
    for _, child in tree.branches():
        validate_tree(child, n, d, below)


def accepting_paths(tree: Tree, prefix: tuple = ()) -> Iterator[tuple[tuple[int, np.ndarray], ...]]:
    if isinstance(tree, Leaf):
        if tree.accept:
            yield prefix
        return
    for proj, child in tree.branches():
        yield from accepting_paths(child, prefix + ((tree.party, proj),))


def count_nodes(tree: Tree) -> int:
    if isinstance(tree, Leaf):
        return 1
    return 1 + sum(count_nodes(c) for _, c in tree.branches())


def tree_to_projector(tree: Tree, n: int, d: int) -> HermitianOperator:
    """Sum over accepting paths of the product of path projectors (identity on unmeasured parties)."""
    validate_tree(tree, n, d)
    acc: dict[tuple[Sequence, Sequence], complex] = {}
    ident = [(a, a, 1.0 + 0j) for a in range(d)]
    for path in accepting_paths(tree):
        local = [ident] * n
        for party, proj in path:
            rows, cols = np.nonzero(np.abs(proj) > 0)
            local[party] = [(int(r), int(c), complex(proj[r, c])) for r, c in zip(rows, cols)]
        for combo in itertools.product(*local):
            u = tuple(x[0] for x in combo)
            v = tuple(x[1] for x in combo)
            val = 1.0 + 0j
            for x in combo:
                val *= x[2]
            acc[(u, v)] = acc.get((u, v), 0) + val
    basis = sorted({key[0] for key in acc} | {key[1] for key in acc})
    index = {u: t for t, u in enumerate(basis)}
    m = np.zeros((len(basis), len(basis)), dtype=complex)
    for (u, v), val in acc.items():
        m[index[u], index[v]] += val
    return HermitianOperator(basis, m, d)


def tree_to_json(tree: Tree) -> dict:
    if isinstance(tree, Leaf):
        return {"leaf": "accept" if tree.accept else "reject"}
    return {
        "party": tree.party,
        "outcomes": [[[[float(z.real), float(z.imag)] for z in row] for row in p] for p in tree.outcomes],
        "children": [tree_to_json(c) for c in tree.children],
        "rest": tree_to_json(tree.rest),
    }


def tree_from_json(obj: dict | str) -> Tree:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "leaf" in obj:
        if obj["leaf"] not in ("accept", "reject"):
            raise PreconditionError(f"unknown leaf {obj['leaf']!r}")
        return ACCEPT if obj["leaf"] == "accept" else REJECT
    outs = [np.array([[complex(re, im) for re, im in row] for row in p]) for p in obj["outcomes"]]
    rest = tree_from_json(obj["rest"]) if "rest" in obj else REJECT
    return Node(int(obj["party"]), tuple(outs), tuple(tree_from_json(c) for c in obj["children"]), rest)


def z_chain(parties: Seq[int], d: int, leaf: Callable[[Sequence], Tree], prefix: Sequence = ()) -> Tree:
    """Computational-basis measurements on `parties` in order, then leaf(outcomes)."""
    if len(prefix) == len(parties):
        return leaf(prefix)
    outs = tuple(z_projector(d, a) for a in range(d))
    kids = tuple(z_chain(parties, d, leaf, prefix + (a,)) for a in range(d))
    return Node(parties[len(prefix)], outs, kids)


def _same_outcome_pair(i: int, j: int, pi: Seq[np.ndarray], pj: Seq[np.ndarray], accept_equal: bool) -> Node:
    """Party i measures pi; party j measures pj; accept iff the outcome labels match (or differ)."""
    kids = []
    for a in range(len(pi)):
        leaves = tuple(ACCEPT if ((a == b) == accept_equal) else REJECT for b in range(len(pj)))
        kids.append(Node(j, tuple(pj), leaves))
    return Node(i, tuple(pi), tuple(kids))


def _pairwise_node(i: int, j: int, pi: Seq[np.ndarray], pj: Seq[np.ndarray], accept: Seq[Seq[bool]]) -> Node:
    kids = []
    for a in range(len(pi)):
        kids.append(Node(j, tuple(pj), tuple(ACCEPT if accept[a][b] else REJECT for b in range(len(pj)))))
    return Node(i, tuple(pi), tuple(kids))


# test projectors

@dataclass(frozen=True, eq=False)
class TestProjector:
    __test__ = False  # not a pytest class

    op: HermitianOperator
    target: PureState
    label: str = ""

    def __post_init__(self):
        if not self.op.is_projector(1e-9):
            raise PreconditionError(f"{self.label}: operator is not a projector")
        res = fixed_residual(self.op, self.target)
        if res > 1e-9:
            raise PreconditionError(f"{self.label}: target not fixed (residual {res:.3e})")

    @property
    def rank(self) -> int:
        return int(round(self.op.trace()))


def _pair_check(n: int, i: int, j: int) -> None:
    if not (0 <= i < j < n):
        raise PreconditionError(f"need 0 <= i < j < n, got i={i}, j={j}, n={n}")


def _dicke_check(k: TypeVector, d: int) -> None:
    if not isinstance(k, TypeVector):
        raise PreconditionError("expected a TypeVector")
    if k.n < 3:
        raise PreconditionError(f"need n >= 3, got n={k.n}")
    if k.r == 0:
        raise PreconditionError("trivial target: k has a single part")
    if d < k.r + 1:
        raise PreconditionError(f"local dimension {d} too small for k={k}")


def _dicke_pattern(k: TypeVector, d: int):
    """(s,) cases with k_s ≥ 2 and (s, t) cases with s < t, with their rest classes."""
    same = [(s, enumerate_type_class(derived_type(k, "remove_two", s), d)) for s in range(k.r + 1) if k.parts[s] >= 2]
    pairs = [
        (s, t, enumerate_type_class(derived_type(k, "remove_pair", s, t), d))
        for s in range(k.r + 1)
        for t in range(s + 1, k.r + 1)
    ]
    return same, pairs


def _leaf_dispatch(k: TypeVector, d: int, on_same: Callable[[int], Tree], on_pair: Callable[[int, int, Sequence], Tree]):
    kpad = list(k.parts) + [0] * (d - len(k.parts))

    def leaf(u: Sequence) -> Tree:
        diff = [a - b for a, b in zip(kpad, content_of(u, d))]
        if any(x < 0 for x in diff):
            return REJECT
        hits = [s for s, x in enumerate(diff) if x]
        if len(hits) == 1:
            return on_same(hits[0])
        s, t = hits
        return on_pair(s, t, u)

    return leaf


def _others(n: int, i: int, j: int) -> list[int]:
    return [p for p in range(n) if p not in (i, j)]


def dicke_test(k: TypeVector, d: int, i: int, j: int) -> tuple[TestProjector, Tree]:
    _dicke_check(k, d)
    n = k.n
    _pair_check(n, i, j)
    same, pairs = _dicke_pattern(k, d)
    terms = []
    for s, rest in same:
        terms.append(embed_two_party(np.kron(z_projector(d, s), z_projector(d, s)), i, j, rest, d))
    for s, t, rest in pairs:
        tp, tm = t_projector(d, s, t, 1), t_projector(d, s, t, -1)
        terms.append(embed_two_party(np.kron(tp, tp) + np.kron(tm, tm), i, j, rest, d))
    op = sum_operators(terms)

    def on_same(s):
        return _pairwise_node(i, j, [z_projector(d, s)], [z_projector(d, s)], [[True]])

    def on_pair(s, t, _u):
        proj = [t_projector(d, s, t, 1), t_projector(d, s, t, -1)]
        return _same_outcome_pair(i, j, proj, proj, accept_equal=True)

    tree = z_chain(_others(n, i, j), d, _leaf_dispatch(k, d, on_same, on_pair))
    return TestProjector(op, dicke_state(k, d), f"dicke[{k}] ({i},{j})"), tree


def phase_difference(phases: dict[Sequence, float], w: Sequence, i: int, j: int, s: int, t: int) -> float:
    """θ(i,j,w) = φ(v(j,i,w)) − φ(v(i,j,w)), where v(i,j,w) puts s on party i and t on party j."""
    return phases[insert_pair(w, i, t, j, s)] - phases[insert_pair(w, i, s, j, t)]


def phased_dicke_test(k: TypeVector, d: int, phi: PhaseFunction, i: int, j: int) -> tuple[TestProjector, Tree]:
    _dicke_check(k, d)
    n = k.n
    _pair_check(n, i, j)
    phases = phi.phases(k, d)
    same, pairs = _dicke_pattern(k, d)
    terms = []
    for s, rest in same:
        terms.append(embed_two_party(np.kron(z_projector(d, s), z_projector(d, s)), i, j, rest, d))
    for s, t, rest in pairs:
        for w in rest:
            th = phase_difference(phases, w, i, j, s, t)
            op2 = np.kron(gamma_projector(d, s, t, th, 1), gamma_projector(d, s, t, -th, 1)) + np.kron(
                gamma_projector(d, s, t, th, -1), gamma_projector(d, s, t, -th, -1)
            )
            terms.append(embed_two_party(op2, i, j, [w], d))
    op = sum_operators(terms)

    def on_same(s):
        return _pairwise_node(i, j, [z_projector(d, s)], [z_projector(d, s)], [[True]])

    def on_pair(s, t, u):
        th = phase_difference(phases, u, i, j, s, t)
        pi = [gamma_projector(d, s, t, th, 1), gamma_projector(d, s, t, th, -1)]
        pj = [gamma_projector(d, s, t, -th, 1), gamma_projector(d, s, t, -th, -1)]
        return _same_outcome_pair(i, j, pi, pj, accept_equal=True)

    tree = z_chain(_others(n, i, j), d, _leaf_dispatch(k, d, on_same, on_pair))
    target = phased_dicke_state(k, phi, d)
    return TestProjector(op, target, f"phased[{k},{phi}] ({i},{j})"), tree


AS_VARIANTS = ("plus-minus", "circular")


def as_test(n: int, i: int, j: int, variant: str = "plus-minus") -> tuple[TestProjector, Tree]:
    if n < 3:
        raise PreconditionError(f"need n >= 3, got n={n}")
    if variant not in AS_VARIANTS:
        raise PreconditionError(f"unknown variant {variant!r}")
    _pair_check(n, i, j)
    d = n
    k = TypeVector((1,) * n)
    proj = t_projector if variant == "plus-minus" else t_tilde_projector
    terms = []
    for s in range(n):
        for t in range(s + 1, n):
            rest = enumerate_type_class(derived_type(k, "remove_pair", s, t), d)
            tp, tm = proj(d, s, t, 1), proj(d, s, t, -1)
            terms.append(embed_two_party(np.kron(tp, tm) + np.kron(tm, tp), i, j, rest, d))
    op = sum_operators(terms)

    def on_pair(s, t, _u):
        pp = [proj(d, s, t, 1), proj(d, s, t, -1)]
        return _same_outcome_pair(i, j, pp, pp, accept_equal=False)

    tree = z_chain(_others(n, i, j), d, _leaf_dispatch(k, d, lambda s: REJECT, on_pair))
    return TestProjector(op, antisymmetric_state(n), f"as[{variant}] n={n} ({i},{j})"), tree


# W-state tests

def w_standard_test(n: int) -> tuple[TestProjector, Tree]:
    if n < 3:
        raise PreconditionError(f"need n >= 3, got n={n}")
    op = HermitianOperator.diagonal(enumerate_type_class((n - 1, 1), 2), 2)
    zs = (z_projector(2, 0), z_projector(2, 1))

    def rec(party: int, weight: int) -> Tree:
        if weight > 1:
            return REJECT
        if party == n:
            return ACCEPT if weight == 1 else REJECT
        return Node(party, zs, (rec(party + 1, weight), rec(party + 1, weight + 1)))

    return TestProjector(op, w_state(n), f"w-standard n={n}"), rec(0, 0)


def beta_vector(n: int, weight: int) -> np.ndarray:
    """Last-party vector (|1⟩ + (n−1−2w)|0⟩)/norm after X outcomes of Hamming weight w."""
    c = n - 1 - 2 * weight
    v = np.array([c, 1.0], dtype=complex)
    return v / np.linalg.norm(v)


def hadamard_power(m: int) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    out = np.ones((1, 1))
    for _ in range(m):
        out = np.kron(out, h)
    return out


def w_adaptive_test(n: int) -> tuple[TestProjector, Tree]:
    if n < 3:
        raise PreconditionError(f"need n >= 3, got n={n}")
    m = n - 1
    hm = hadamard_power(m)
    weights = np.array([bin(x).count("1") for x in range(2**m)])
    p2 = np.zeros((2**n, 2**n), dtype=complex)
    for w in range(m + 1):
        pi_w = (hm * (weights == w)) @ hm
        p2 += np.kron(pi_w, rank1(beta_vector(n, w)))
    op = HermitianOperator(full_basis(n, 2), p2, 2)
    xs = (X_PLUS, X_MINUS)

    def rec(party: int, weight: int) -> Tree:
        if party == m:
            return Node(m, (rank1(beta_vector(n, weight)),), (ACCEPT,))
        return Node(party, xs, (rec(party + 1, weight), rec(party + 1, weight + 1)))

    return TestProjector(op, w_state(n), f"w-adaptive n={n}"), rec(0, 0)


def w3_test3() -> tuple[TestProjector, Tree]:
    basis = full_basis(3, 2)
    m = np.zeros((8, 8), dtype=complex)
    m[4, 4] = 1  # |100>
    m[:4, :4] = np.kron(X_PLUS, X_PLUS) + np.kron(X_MINUS, X_MINUS)
    op = HermitianOperator(basis, m, 2)
    zs = (z_projector(2, 0), z_projector(2, 1))
    tree = Node(
        0,
        zs,
        (
            _same_outcome_pair(1, 2, [X_PLUS, X_MINUS], [X_PLUS, X_MINUS], accept_equal=True),
            _pairwise_node(1, 2, zs, zs, [[True, False], [False, False]]),
        ),
    )
    return TestProjector(op, w_state(3), "w3-test3"), tree


def w3_tests() -> list[tuple[TestProjector, Tree]]:
    return [w_standard_test(3), w_adaptive_test(3), w3_test3()]


def seq_label(u: Sequence, d: int) -> str:
    return seq_to_text(u, d)
