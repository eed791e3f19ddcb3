"""Transposition graphs G(k) on a type class and their spectral extremes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Sequence, TypeVector, as_content, enumerate_type_class
from .errors import NumericalError

SPECTRUM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class TranspositionGraph:
    k: TypeVector
    vertices: list[Sequence]
    adjacency: np.ndarray

    @property
    def n(self) -> int:
        return self.k.n

    @property
    def degree(self) -> int:
        """(n² − Σ k_s²)/2: the number of position pairs holding different symbols."""
        return (self.n**2 - sum(x * x for x in self.k.parts)) // 2

    def eigenvalues(self) -> np.ndarray:
        """Ascending adjacency spectrum."""
        return np.linalg.eigvalsh(self.adjacency.astype(float))

    def is_bipartite(self) -> bool:
        colour = np.full(len(self.vertices), -1)
        for start in range(len(self.vertices)):
            if colour[start] >= 0:
                continue
            colour[start] = 0
            stack = [start]
            while stack:
                a = stack.pop()
                for b in np.flatnonzero(self.adjacency[a]):
                    if colour[b] < 0:
                        colour[b] = 1 - colour[a]
                        stack.append(b)
                    elif colour[b] == colour[a]:
                        return False
        return True

    def edge_list_text(self) -> str:
        """One "u v" line per edge, sequences written as digit strings."""
        lines = []
        for a, b in zip(*np.nonzero(np.triu(self.adjacency))):
            u, v = self.vertices[a], self.vertices[b]
            lines.append(f"{''.join(map(str, u))} {''.join(map(str, v))}")
        return "\n".join(lines) + ("\n" if lines else "")


def build_graph(k: TypeVector) -> TranspositionGraph:
    """u ~ v iff they differ in exactly two positions."""
    verts = enumerate_type_class(k, len(as_content(k)))
    arr = np.array(verts, dtype=np.int16).reshape(len(verts), k.n)
    diff = (arr[:, None, :] != arr[None, :, :]).sum(axis=2)
    adj = (diff == 2).astype(np.int8)
    return TranspositionGraph(k, verts, adj)


def _multiplicity(values: np.ndarray, target: float) -> int:
    return int(np.sum(np.abs(values - target) < SPECTRUM_TOL))


def spectrum_extremes(k: TypeVector, check: bool = True) -> tuple[float, int, float, float, float]:
    """(λ_max, mult(λ_max), λ_second, λ_min, λ_second_min) of G(k).

    With check=True, also asserts λ_max = deg with multiplicity 1, λ_second = deg − n,
    and for distinct symbols λ_min = −deg (multiplicity 1) and second smallest n − deg.
    """
    g = build_graph(k)
    ev = g.eigenvalues()
    lam_max = float(ev[-1])
    mult = _multiplicity(ev, lam_max)
    distinct_desc = sorted({round(float(x), 8) for x in ev}, reverse=True)
    lam2 = float(distinct_desc[1]) if len(distinct_desc) > 1 else lam_max
    lam_min = float(ev[0])
    lam_min2 = float(distinct_desc[-2]) if len(distinct_desc) > 1 else lam_min
    # snap back to the unrounded eigenvalues
    lam2 = float(ev[np.argmin(np.abs(ev - lam2))])
    lam_min2 = float(ev[np.argmin(np.abs(ev - lam_min2))])
    if check:
        deg, n = g.degree, g.n
        rows = set(int(x) for x in g.adjacency.sum(axis=1))
        if rows != {deg}:
            raise NumericalError(f"graph is not {deg}-regular: row sums {sorted(rows)}")
        if abs(lam_max - deg) > SPECTRUM_TOL or mult != 1:
            raise NumericalError("top eigenvalue is not the degree with multiplicity 1")
        if len(ev) > 1 and abs(lam2 - (deg - n)) > SPECTRUM_TOL:
            raise NumericalError(f"second eigenvalue {lam2} differs from deg − n = {deg - n}")
        if len(ev) > 1 and all(x == 1 for x in k.parts):
            if abs(lam_min + deg) > SPECTRUM_TOL or _multiplicity(ev, lam_min) != 1:
                raise NumericalError("smallest eigenvalue is not −deg with multiplicity 1")
            if abs(lam_min2 - (n - deg)) > SPECTRUM_TOL:
                raise NumericalError(f"second smallest eigenvalue {lam_min2} differs from n − deg")
    return lam_max, mult, lam2, lam_min, lam_min2
