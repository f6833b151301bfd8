"""Second-quadrant spectral sequence pages.

Pages live in bidegrees (-p, q) with 0 <= p <= max_p and 1 <= q <= q_max;
zero entries are omitted. The page-r differential moves (-p, q) to
(-p - r, q + r - 1). Differentials beyond the first page are exclusively
caller input: the engine validates them (bidegree law, shapes, squares to
zero) and never invents one.

Turning a page replaces every entry by the kernel of its outgoing
differential modulo the image of the incoming one, with unattached
differentials read as zero. Each turned page remembers section data tying
its entries to the previous page, which is how morphisms of pages are
transported through turns.

Pages supported in columns 0..n stabilize at page n+1: any later
differential starts or ends outside the support. ``run_to_convergence``
certifies exactly that page, and only certified pages may be read off as
an abutment.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from .abelian import (
    FGModule,
    LocalizationRing,
    ModuleHom,
    SubquotientSections,
    compose,
    hom_difference,
    induced_hom,
    is_isomorphism,
    subquotient,
)
from .coefficients import CoefficientMap, GradedCoefficientSystem
from .errors import (
    BidegreeViolation,
    CompositionNonzero,
    NoncommutingDifferentials,
    NotConverged,
    ShapeMismatch,
)
from .simplicial import (
    SimplicialComplex,
    SimplicialMap,
    coboundary_hom,
    coefficient_cochain_hom,
    cochain_module,
    pullback_cochain_hom,
)

Bidegree = tuple[int, int]

DEFAULT_DEGREE_CEILING = 12


def _worker_count() -> int:
    raw = os.environ.get("SPECSEQ_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parallel_map(fn: Callable, items: Sequence):
    """Apply fn over independent items, threaded when SPECSEQ_THREADS > 1."""
    workers = _worker_count()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def differential_target(at: Bidegree, r: int) -> Bidegree:
    s, q = at
    return (s - r, q + r - 1)


def differential_source(at: Bidegree, r: int) -> Bidegree:
    s, q = at
    return (s + r, q - r + 1)


@dataclass(frozen=True)
class SpectralPage:
    """One page of a second-quadrant spectral sequence.

    ``entries`` maps (-p, q) to a module (zero entries omitted);
    ``differentials`` maps a source bidegree to the hom it emits, always
    obeying the page's bidegree law. ``sections`` tie entries of a turned
    page back to the previous page and are carried for morphism
    transport; they do not take part in equality.
    """

    ring: LocalizationRing
    r: int
    entries: Mapping[Bidegree, FGModule]
    differentials: Mapping[Bidegree, ModuleHom] = field(default_factory=dict)
    max_p: int = 0
    q_max: int = DEFAULT_DEGREE_CEILING
    final: bool = False
    sections: Mapping[Bidegree, SubquotientSections] | None = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("page index starts at 1")
        cleaned = {}
        for key, module in self.entries.items():
            s, q = key
            if s > 0 or -s > self.max_p or q < 1 or q > self.q_max:
                raise ValueError(f"entry at {key} outside the page window")
            if module.ring != self.ring:
                raise ValueError("entry ring disagrees with the page ring")
            if not module.is_zero():
                cleaned[(s, q)] = module
        object.__setattr__(self, "entries", cleaned)
        for at, hom in self.differentials.items():
            self._validate_differential(at, hom, cleaned)

    def _validate_differential(self, at: Bidegree, hom: ModuleHom, entries) -> None:
        target = differential_target(at, self.r)
        if hom.domain != self.entry(at) or hom.codomain != self.entry(target):
            raise ShapeMismatch(
                f"differential at {at} does not run {at} -> {target}",
                at=at,
                expected_target=target,
            )

    def entry(self, at: Bidegree) -> FGModule:
        return self.entries.get(at, FGModule.zero(self.ring))

    def differential(self, at: Bidegree) -> ModuleHom:
        hom = self.differentials.get(at)
        if hom is not None:
            return hom
        return ModuleHom.zero(self.entry(at), self.entry(differential_target(at, self.r)))

    def bidegrees(self) -> list[Bidegree]:
        return sorted(self.entries, key=lambda b: (-b[0], b[1]))

    def nonzero_rank_total(self) -> int:
        return sum(m.free_rank for m in self.entries.values())

    def to_json(self) -> dict:
        entries = {}
        for s, q in self.bidegrees():
            entries[f"{s},{q}"] = self.entries[(s, q)].to_json()
        diffs = {}
        for s, q in sorted(self.differentials, key=lambda b: (-b[0], b[1])):
            diffs[f"{s},{q}"] = self.differentials[(s, q)].matrix.to_lists()
        return {"r": self.r, "entries": entries, "differentials": diffs}


def attach_differential(
    page: SpectralPage, at: Bidegree, d: ModuleHom, target: Bidegree | None = None
) -> SpectralPage:
    """A new page value with the differential recorded at ``at``.

    The target is forced by the bidegree law; passing an explicit one
    that disagrees is a BIDEGREE_VIOLATION. The attached map must square
    to zero against the differentials already present.
    """
    law_target = differential_target(at, page.r)
    if target is not None and tuple(target) != law_target:
        raise BidegreeViolation(
            f"page {page.r} differentials map {at} to {law_target}, not {tuple(target)}",
            at=at,
            requested=tuple(target),
            required=law_target,
        )
    if d.domain != page.entry(at) or d.codomain != page.entry(law_target):
        raise ShapeMismatch(
            f"differential endpoints do not match the entries at {at} -> {law_target}",
            at=at,
        )
    downstream = page.differentials.get(law_target)
    if downstream is not None and not compose(downstream, d).is_zero_hom():
        raise CompositionNonzero(
            f"differentials through {law_target} do not compose to zero",
            source=at,
            through=law_target,
        )
    upstream_at = differential_source(at, page.r)
    upstream = page.differentials.get(upstream_at)
    if upstream is not None and not compose(d, upstream).is_zero_hom():
        raise CompositionNonzero(
            f"differentials through {at} do not compose to zero",
            source=upstream_at,
            through=at,
        )
    diffs = dict(page.differentials)
    if d.is_zero_hom():
        diffs.pop(at, None)
    else:
        diffs[at] = d
    return replace(page, differentials=diffs)


def turn_page(page: SpectralPage) -> SpectralPage:
    """Page r+1: kernel modulo image at every bidegree.

    Unattached differentials act as zero. The result carries no
    differentials (the next ones are caller input) and remembers the
    section data of each surviving entry.
    """
    bidegrees = page.bidegrees()

    def one_entry(at: Bidegree):
        incoming = page.differential(differential_source(at, page.r))
        outgoing = page.differential(at)
        module, sections = subquotient(incoming, outgoing)
        return at, module, sections

    results = _parallel_map(one_entry, bidegrees)
    entries = {}
    sections = {}
    for at, module, secs in results:
        if not module.is_zero():
            entries[at] = module
        sections[at] = secs
    return SpectralPage(
        ring=page.ring,
        r=page.r + 1,
        entries=entries,
        differentials={},
        max_p=page.max_p,
        q_max=page.q_max,
        sections=sections,
    )


DifferentialSupplier = Callable[[SpectralPage], SpectralPage | None]


def stable_page_index(dim: int) -> int:
    """Pages supported in columns 0..dim cannot move after page dim+1
    (any later differential leaves the support), but the first-page
    differential is structural, so the floor is page 2."""
    return max(2, dim + 1)


def run_to_convergence(
    page: SpectralPage, dim: int, supplier: DifferentialSupplier | None = None
) -> SpectralPage:
    """Iterate page turns through the stable page and certify the result.

    The supplier may attach differentials before each turn (returning the
    augmented page) or decline by returning the page unchanged or None.
    """
    if dim != page.max_p:
        raise ShapeMismatch(
            f"convergence bound {dim} disagrees with the page support {page.max_p}",
            dim=dim,
            max_p=page.max_p,
        )
    while page.r < stable_page_index(dim):
        page = _consult_supplier(page, supplier)
        page = turn_page(page)
    return replace(page, final=True)


def _consult_supplier(page: SpectralPage, supplier: DifferentialSupplier | None) -> SpectralPage:
    if supplier is None:
        return page
    updated = supplier(page)
    if updated is None:
        return page
    if updated.r != page.r or updated.entries != page.entries:
        raise ShapeMismatch("supplier returned a page with different support")
    return updated


@dataclass(frozen=True)
class AbutmentReport:
    """Associated graded pieces of the abutting filtration, by total
    degree n >= 1.

    Over the rationals the pieces sum directly (vector spaces split);
    over anything smaller only the associated graded is reported.
    """

    ring: LocalizationRing
    degrees: Mapping[int, tuple[tuple[int, FGModule], ...]]
    extension_status: str
    max_degree: int

    def pieces(self, n: int) -> tuple[tuple[int, FGModule], ...]:
        return self.degrees.get(n, ())

    def total_rank(self, n: int) -> int:
        return sum(m.free_rank for _, m in self.pieces(n))

    def to_json(self) -> dict:
        return {
            "ring": self.ring.to_json(),
            "extension_status": self.extension_status,
            "max_degree": self.max_degree,
            "degrees": {
                str(n): [{"p": p, "module": m.to_json()} for p, m in self.degrees[n]]
                for n in sorted(self.degrees)
            },
        }


SPLIT = "SPLIT"
ASSOCIATED_GRADED_ONLY = "ASSOCIATED_GRADED_ONLY"


def abutment(page: SpectralPage, degree_ceiling: int | None = None) -> AbutmentReport:
    """Read the graded pieces off a certified final page.

    Only total degrees whose entire diagonal fits inside the materialized
    window are reported; terms of non-positive total degree are discarded
    by convention.
    """
    if not page.final:
        raise NotConverged("abutment of a page not certified as final", r=page.r)
    limit = page.q_max - page.max_p
    if degree_ceiling is not None:
        limit = min(limit, degree_ceiling)
    degrees = {}
    for n in range(1, limit + 1):
        pieces = []
        for p in range(0, page.max_p + 1):
            module = page.entry((-p, n + p))
            if not module.is_zero():
                pieces.append((p, module))
        if pieces:
            degrees[n] = tuple(pieces)
    status = SPLIT if page.ring.all_primes else ASSOCIATED_GRADED_ONLY
    return AbutmentReport(page.ring, degrees, status, max_degree=limit)


def first_page(
    complex_: SimplicialComplex,
    system: GradedCoefficientSystem,
    degree_ceiling: int = DEFAULT_DEGREE_CEILING,
) -> SpectralPage:
    """The cochain-level page: entry (-p, q) is one copy of the degree-q
    coefficient module per p-simplex, with the coefficient coboundary as
    the built-in first differential."""
    if degree_ceiling < 1:
        raise ValueError("degree ceiling must be >= 1")
    dim = max(complex_.dimension, 0)
    q_max = system.max_degree(dim + degree_ceiling)
    if q_max < 1:
        raise ValueError("empty degree window")
    entries = {}
    diffs = {}
    for q in range(1, q_max + 1):
        coeff = system.evaluate(q)
        if coeff.is_zero():
            continue
        for p in range(0, dim + 1):
            module = cochain_module(complex_, coeff, p)
            if not module.is_zero():
                entries[(-p, q)] = module
        for p in range(0, dim):
            hom = coboundary_hom(complex_, coeff, p)
            if not hom.is_zero_hom():
                diffs[(-p, q)] = hom
    return SpectralPage(
        ring=system.ring,
        r=1,
        entries=entries,
        differentials=diffs,
        max_p=dim,
        q_max=q_max,
    )


def second_page(
    complex_: SimplicialComplex,
    system: GradedCoefficientSystem,
    degree_ceiling: int = DEFAULT_DEGREE_CEILING,
) -> SpectralPage:
    """The cohomology page: entry (-p, q) is H^p with degree-q
    coefficients, obtained by turning the cochain page once."""
    return turn_page(first_page(complex_, system, degree_ceiling))


@dataclass(frozen=True)
class PageMorphism:
    """Bidegree-wise homs between two pages of the same index.

    Missing components are zero maps. Whenever both pages carry
    differentials the components are expected to commute with them; the
    comparison pipeline checks that explicitly before trusting it.
    """

    source: SpectralPage
    target: SpectralPage
    maps: Mapping[Bidegree, ModuleHom] = field(default_factory=dict)

    def __post_init__(self):
        if self.source.r != self.target.r:
            raise ShapeMismatch("page morphism between different page indices")
        cleaned = {}
        for at, hom in self.maps.items():
            at = tuple(at)
            if hom.domain != self.source.entry(at) or hom.codomain != self.target.entry(at):
                raise ShapeMismatch(f"component at {at} does not match the entries", at=at)
            if not hom.is_zero_hom():
                cleaned[at] = hom
        object.__setattr__(self, "maps", cleaned)

    def component(self, at: Bidegree) -> ModuleHom:
        hom = self.maps.get(tuple(at))
        if hom is not None:
            return hom
        return ModuleHom.zero(self.source.entry(at), self.target.entry(at))

    def support(self) -> list[Bidegree]:
        keys = set(self.source.entries) | set(self.target.entries)
        return sorted(keys, key=lambda b: (-b[0], b[1]))

    def noniso_bidegrees(self) -> list[Bidegree]:
        return [at for at in self.support() if not is_isomorphism(self.component(at))]

    def commutes_with_differentials(self) -> list[Bidegree]:
        """Bidegrees where naturality against the attached differentials
        fails; empty means the morphism is a morphism of pages."""
        bad = []
        for at in set(self.source.differentials) | set(self.target.differentials):
            tgt = differential_target(at, self.source.r)
            left = compose(self.component(tgt), self.source.differential(at))
            right = compose(self.target.differential(at), self.component(at))
            if not hom_difference(left, right).is_zero_hom():
                bad.append(at)
        return sorted(bad, key=lambda b: (-b[0], b[1]))


def page_morphism_from_coefficients(
    complex_: SimplicialComplex,
    m: CoefficientMap,
    degree_ceiling: int = DEFAULT_DEGREE_CEILING,
) -> PageMorphism:
    """Cohomology-page morphism induced by a coefficient map (covariant)."""
    source_page = second_page(complex_, m.source, degree_ceiling)
    target_page = second_page(complex_, m.target, degree_ceiling)
    maps = {}
    for at in set(source_page.entries) & set(target_page.entries):
        p, q = -at[0], at[1]
        ambient = coefficient_cochain_hom(complex_, m.component(q), p)
        maps[at] = induced_hom(
            _entry_sections(source_page, at), _entry_sections(target_page, at), ambient
        )
    return PageMorphism(source_page, target_page, maps)


def page_morphism_from_map(
    f: SimplicialMap,
    system: GradedCoefficientSystem,
    degree_ceiling: int = DEFAULT_DEGREE_CEILING,
) -> PageMorphism:
    """Cohomology-page morphism induced by a simplicial map
    (contravariant: the page of the map's target maps to the page of its
    source)."""
    source_page = second_page(f.target, system, degree_ceiling)
    target_page = second_page(f.source, system, degree_ceiling)
    maps = {}
    for at in set(source_page.entries) & set(target_page.entries):
        p, q = -at[0], at[1]
        ambient = pullback_cochain_hom(f, system.evaluate(q), p)
        maps[at] = induced_hom(
            _entry_sections(source_page, at), _entry_sections(target_page, at), ambient
        )
    return PageMorphism(source_page, target_page, maps)


def _entry_sections(page: SpectralPage, at: Bidegree) -> SubquotientSections:
    if page.sections is None or at not in page.sections:
        raise ShapeMismatch(f"page carries no section data at {at}", at=at)
    return page.sections[at]


def transport_morphism(m: PageMorphism, turned_source: SpectralPage, turned_target: SpectralPage) -> PageMorphism:
    """Induce a morphism on the turned pages from one on the current
    pages; callers must already have checked commutation."""
    maps = {}
    for at in set(turned_source.entries) & set(turned_target.entries):
        maps[at] = induced_hom(
            _entry_sections(turned_source, at),
            _entry_sections(turned_target, at),
            m.component(at),
        )
    return PageMorphism(turned_source, turned_target, maps)


ISO_ON_ABUTMENT_GRADED = "ISO_ON_ABUTMENT_GRADED"
NOT_ISO_AT_E2 = "NOT_ISO_AT_E2"


@dataclass(frozen=True)
class ComparisonVerdict:
    status: str
    failing_bidegrees: tuple[Bidegree, ...] = ()
    source_abutment: AbutmentReport | None = None
    target_abutment: AbutmentReport | None = None

    def to_json(self) -> dict:
        out = {"status": self.status}
        if self.failing_bidegrees:
            out["failing_bidegrees"] = [list(b) for b in self.failing_bidegrees]
        if self.source_abutment is not None:
            out["source_abutment"] = self.source_abutment.to_json()
        if self.target_abutment is not None:
            out["target_abutment"] = self.target_abutment.to_json()
        return out


def comparison_verdict(
    m: PageMorphism,
    dim: int,
    suppliers: tuple[DifferentialSupplier | None, DifferentialSupplier | None] = (None, None),
    degree_ceiling: int | None = None,
) -> ComparisonVerdict:
    """The standard comparison argument, run exactly.

    If the morphism fails to be an isomorphism anywhere on the starting
    page, that is the verdict. Otherwise both sides are run to their
    stable pages in lockstep, differentials supplied along the way are
    checked for naturality, the morphism is transported through every
    turn (staying an isomorphism, which is asserted), and the two
    abutments are reported.
    """
    failing = m.noniso_bidegrees()
    if failing:
        return ComparisonVerdict(NOT_ISO_AT_E2, tuple(failing))
    source, target = m.source, m.target
    supplier_source, supplier_target = suppliers
    while source.r < stable_page_index(dim):
        source = _consult_supplier(source, supplier_source)
        target = _consult_supplier(target, supplier_target)
        m = PageMorphism(source, target, m.maps)
        bad = m.commutes_with_differentials()
        if bad:
            raise NoncommutingDifferentials(
                f"supplied differentials fail naturality at {bad}", bidegrees=bad
            )
        turned_source = turn_page(source)
        turned_target = turn_page(target)
        m = transport_morphism(m, turned_source, turned_target)
        still_bad = m.noniso_bidegrees()
        if still_bad:
            raise AssertionError(
                f"comparison invariant broken at {still_bad}: an isomorphism of pages "
                "with commuting differentials must stay an isomorphism"
            )
        source, target = turned_source, turned_target
    source = replace(source, final=True)
    target = replace(target, final=True)
    return ComparisonVerdict(
        ISO_ON_ABUTMENT_GRADED,
        (),
        abutment(source, degree_ceiling),
        abutment(target, degree_ceiling),
    )
