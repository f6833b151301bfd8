"""Finite abstract simplicial complexes and their cohomology.

Complexes carry oriented boundary matrices fixed by sorted vertex order
with alternating signs, so every matrix the engine produces is canonical
and reproducible. Cohomology is unreduced throughout: the degree-zero
group of a connected complex is the full coefficient module, which is
what the rest of the engine (mapping-space corrections, page entries at
the left column) relies on.

Two independent code paths compute H^p(X; G):

* :func:`cohomology` assembles it from integral homology via universal
  coefficients, which is cheap and coordinate-free;
* :func:`cochain_cohomology` computes ker/im of the coefficient-level
  coboundaries directly, and also returns the section data needed to
  push cochain-level maps down to cohomology.

They agree on everything, and the test suite holds them to that.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .abelian import (
    FGModule,
    LocalizationRing,
    ModuleHom,
    direct_sum,
    ext_module,
    hom_module,
    sum_of_copies,
    SubquotientSections,
    induced_hom,
    subquotient,
    tensor_localize,
)
from .intmat import IntMatrix, smith_normal_form

FIXTURE_NAMES = ("point", "circle", "sphere", "torus", "rp2", "two_points")


@dataclass(frozen=True)
class SimplicialComplex:
    """A finite abstract simplicial complex.

    ``by_dim[p]`` lists the p-simplices as strictly increasing vertex
    tuples, sorted lexicographically. Every vertex below ``vertex_count``
    is a 0-simplex, and the family is closed under taking faces.
    """

    vertex_count: int
    by_dim: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self):
        seen: set[tuple[int, ...]] = set()
        for p, simplices in enumerate(self.by_dim):
            if list(simplices) != sorted(set(simplices)):
                raise ValueError(f"dimension {p} simplices not sorted and unique")
            for s in simplices:
                if len(s) != p + 1 or list(s) != sorted(set(s)):
                    raise ValueError(f"{s} is not a strictly increasing {p}-simplex")
                if s[-1] >= self.vertex_count or s[0] < 0:
                    raise ValueError(f"{s} references a vertex out of range")
                seen.add(s)
                if p > 0:
                    for face in combinations(s, p):
                        if face not in seen:
                            raise ValueError(f"face {face} of {s} is missing")
        if self.by_dim and not self.by_dim[-1]:
            raise ValueError("trailing empty dimension")

    @classmethod
    def from_simplices(cls, vertex_count: int, simplices: Iterable[Sequence[int]]) -> "SimplicialComplex":
        """Close the given simplices under faces; all vertices below
        ``vertex_count`` are included whether or not they are listed."""
        closed: set[tuple[int, ...]] = {(v,) for v in range(vertex_count)}
        for s in simplices:
            top = tuple(sorted(set(int(v) for v in s)))
            if not top:
                continue
            for size in range(1, len(top) + 1):
                closed.update(combinations(top, size))
        if not closed:
            return cls(vertex_count, ())
        dim = max(len(s) for s in closed) - 1
        by_dim = tuple(
            tuple(sorted(s for s in closed if len(s) == p + 1)) for p in range(dim + 1)
        )
        return cls(vertex_count, by_dim)

    @property
    def dimension(self) -> int:
        return len(self.by_dim) - 1

    def simplices(self, p: int) -> tuple[tuple[int, ...], ...]:
        if 0 <= p <= self.dimension:
            return self.by_dim[p]
        return ()

    def simplex_count(self, p: int) -> int:
        return len(self.simplices(p))

    def euler_characteristic(self) -> int:
        return sum((-1) ** p * self.simplex_count(p) for p in range(self.dimension + 1))

    def boundary_matrix(self, p: int) -> IntMatrix:
        """Oriented boundary from p-chains to (p-1)-chains.

        Rows are indexed by (p-1)-simplices, columns by p-simplices; the
        entry is (-1)^i when deleting the i-th vertex of the column
        simplex yields the row simplex.
        """
        if p < 0:
            raise ValueError("negative dimension")
        rows = self.simplices(p - 1)
        cols = self.simplices(p)
        index = {s: i for i, s in enumerate(rows)}
        matrix = IntMatrix.zeros(len(rows), len(cols))
        for j, simplex in enumerate(cols):
            for i in range(len(simplex)):
                face = simplex[:i] + simplex[i + 1 :]
                if face in index:
                    matrix.rows[index[face]][j] = (-1) ** i
        return matrix

    def coboundary_matrix(self, p: int) -> IntMatrix:
        """The map on integer cochains from degree p to degree p+1."""
        return self.boundary_matrix(p + 1).transpose()

    def skeleton(self, p: int) -> "SimplicialComplex":
        if p < 0:
            return SimplicialComplex(self.vertex_count, ())
        return SimplicialComplex(self.vertex_count, self.by_dim[: p + 1])

    def maximal_simplices(self) -> list[tuple[int, ...]]:
        maximal: list[tuple[int, ...]] = []
        everything = {s for layer in self.by_dim for s in layer}
        for layer in self.by_dim:
            for s in layer:
                if not any(
                    set(s) < set(t) for t in everything if len(t) == len(s) + 1
                ):
                    maximal.append(s)
        return maximal

    def to_json(self) -> dict:
        return {
            "vertices": self.vertex_count,
            "simplices": [list(s) for s in self.maximal_simplices()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SimplicialComplex":
        return cls.from_simplices(int(obj["vertices"]), obj.get("simplices", []))


@dataclass(frozen=True)
class SimplicialMap:
    """A vertex map whose image of every simplex is again a simplex."""

    source: SimplicialComplex
    target: SimplicialComplex
    vertex_map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertex_map", tuple(int(v) for v in self.vertex_map))
        if len(self.vertex_map) != self.source.vertex_count:
            raise ValueError("vertex map length does not match the source")
        for v in self.vertex_map:
            if not 0 <= v < self.target.vertex_count:
                raise ValueError(f"vertex image {v} out of range")
        for p in range(self.source.dimension + 1):
            for s in self.source.simplices(p):
                image = tuple(sorted(set(self.vertex_map[v] for v in s)))
                if image not in self.target.simplices(len(image) - 1):
                    raise ValueError(f"image of {s} is not a simplex of the target")

    def __call__(self, vertex: int) -> int:
        return self.vertex_map[vertex]

    @classmethod
    def identity(cls, complex_: SimplicialComplex) -> "SimplicialMap":
        return cls(complex_, complex_, tuple(range(complex_.vertex_count)))

    def after(self, other: "SimplicialMap") -> "SimplicialMap":
        """The composite ``self . other`` (apply ``other`` first)."""
        if other.target is not self.source and other.target != self.source:
            raise ValueError("composition shape mismatch")
        return SimplicialMap(
            other.source, self.target, tuple(self.vertex_map[v] for v in other.vertex_map)
        )


def _sign_of_sorting(values: Sequence[int]) -> int:
    # Parity of the permutation sorting `values` (assumed distinct).
    values = list(values)
    sign = 1
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if values[i] > values[j]:
                sign = -sign
    return sign


def pullback_incidence(f: SimplicialMap, p: int) -> IntMatrix:
    """Integer cochain pullback C^p(target) -> C^p(source).

    A source simplex whose image degenerates contributes zero; otherwise
    the entry is the sign of the vertex-sorting permutation.
    """
    rows = f.source.simplices(p)
    cols = f.target.simplices(p)
    index = {s: j for j, s in enumerate(cols)}
    matrix = IntMatrix.zeros(len(rows), len(cols))
    for i, s in enumerate(rows):
        image = [f.vertex_map[v] for v in s]
        if len(set(image)) != len(image):
            continue
        matrix.rows[i][index[tuple(sorted(image))]] = _sign_of_sorting(image)
    return matrix


def integral_homology(complex_: SimplicialComplex, p: int) -> FGModule:
    """H_p(X; Z) read off the Smith forms of the two boundary maps."""
    ring = LocalizationRing.integers()
    if p < 0 or p > complex_.dimension:
        return FGModule.zero(ring)
    rank_in = smith_normal_form(complex_.boundary_matrix(p)).rank()
    snf_out = smith_normal_form(complex_.boundary_matrix(p + 1))
    betti = complex_.simplex_count(p) - rank_in - snf_out.rank()
    return FGModule.from_orders(ring, betti, [d for d in snf_out.invariants() if d > 1])


def cohomology(complex_: SimplicialComplex, coefficients: FGModule, p: int) -> FGModule:
    """H^p(X; G), assembled by universal coefficients over G's ring."""
    if p < 0:
        return FGModule.zero(coefficients.ring)
    h_p = tensor_localize(integral_homology(complex_, p), coefficients.ring)
    h_below = tensor_localize(integral_homology(complex_, p - 1), coefficients.ring)
    return direct_sum(
        [hom_module(h_p, coefficients), ext_module(h_below, coefficients)]
    )


def cochain_module(complex_: SimplicialComplex, coefficients: FGModule, p: int) -> FGModule:
    module, _ = sum_of_copies(coefficients, complex_.simplex_count(p))
    return module


def _copies_hom(incidence: IntMatrix, coefficients: FGModule) -> ModuleHom:
    """Tensor an integer incidence matrix with the identity of G."""
    dom, dpos = sum_of_copies(coefficients, incidence.ncols)
    cod, cpos = sum_of_copies(coefficients, incidence.nrows)
    matrix = IntMatrix.zeros(cod.ngens, dom.ngens)
    for r in range(incidence.nrows):
        for c in range(incidence.ncols):
            v = incidence.rows[r][c]
            if v == 0:
                continue
            for g in range(coefficients.ngens):
                matrix.rows[cpos[(r, g)]][dpos[(c, g)]] = v
    return ModuleHom(dom, cod, matrix)


def coboundary_hom(complex_: SimplicialComplex, coefficients: FGModule, p: int) -> ModuleHom:
    """The coboundary C^p(X; G) -> C^{p+1}(X; G) as a module hom."""
    if p < 0:
        return ModuleHom.zero(
            FGModule.zero(coefficients.ring), cochain_module(complex_, coefficients, 0)
        )
    return _copies_hom(complex_.coboundary_matrix(p), coefficients)


def cochain_cohomology(
    complex_: SimplicialComplex, coefficients: FGModule, p: int
) -> tuple[FGModule, SubquotientSections]:
    """H^p(X; G) as ker/im of coefficient-level coboundaries.

    The direct route: slower than universal coefficients but it carries
    the coordinate sections used for functoriality.
    """
    return subquotient(
        coboundary_hom(complex_, coefficients, p - 1),
        coboundary_hom(complex_, coefficients, p),
    )


def pullback_cochain_hom(f: SimplicialMap, coefficients: FGModule, p: int) -> ModuleHom:
    return _copies_hom(pullback_incidence(f, p), coefficients)


def induced_cohomology_map(f: SimplicialMap, coefficients: FGModule, p: int) -> ModuleHom:
    """The contravariant map H^p(target; G) -> H^p(source; G)."""
    _, target_sections = cochain_cohomology(f.target, coefficients, p)
    _, source_sections = cochain_cohomology(f.source, coefficients, p)
    return induced_hom(target_sections, source_sections, pullback_cochain_hom(f, coefficients, p))


def coefficient_cochain_hom(
    complex_: SimplicialComplex, h: ModuleHom, p: int
) -> ModuleHom:
    """Apply a coefficient hom G -> H on every p-simplex slot at once."""
    k = complex_.simplex_count(p)
    dom, dpos = sum_of_copies(h.domain, k)
    cod, cpos = sum_of_copies(h.codomain, k)
    matrix = IntMatrix.zeros(cod.ngens, dom.ngens)
    for c in range(k):
        for i in range(h.codomain.ngens):
            for j in range(h.domain.ngens):
                v = h.matrix.rows[i][j]
                if v:
                    matrix.rows[cpos[(c, i)]][dpos[(c, j)]] = v
    return ModuleHom(dom, cod, matrix)


def induced_coefficient_map(
    complex_: SimplicialComplex, h: ModuleHom, p: int
) -> ModuleHom:
    """The covariant map H^p(X; G) -> H^p(X; H) of a coefficient hom."""
    _, source_sections = cochain_cohomology(complex_, h.domain, p)
    _, target_sections = cochain_cohomology(complex_, h.codomain, p)
    return induced_hom(source_sections, target_sections, coefficient_cochain_hom(complex_, h, p))


def load_complex(path_or_obj) -> SimplicialComplex:
    if isinstance(path_or_obj, dict):
        return SimplicialComplex.from_json(path_or_obj)
    with open(path_or_obj, "r", encoding="utf-8") as fh:
        return SimplicialComplex.from_json(json.load(fh))


def fixture_complex(name: str) -> SimplicialComplex:
    """One of the bundled complexes: point, circle (triangle), sphere
    (boundary of the 3-simplex), torus (7 vertices), rp2 (6 vertices),
    two_points."""
    if name not in FIXTURE_NAMES:
        raise ValueError(f"unknown fixture {name!r}; choose from {FIXTURE_NAMES}")
    text = resources.files("specseq.fixtures").joinpath(f"{name}.json").read_text()
    return SimplicialComplex.from_json(json.loads(text))
