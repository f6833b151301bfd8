"""End-to-end pipelines for section-algebra computations.

A :class:`SectionProblem` packages everything the engine needs about a
bundle situation: the base complex, the graded coefficient system of the
fibre, the localization to work over, and (optionally) the stabilized
K-theoretic system together with the comparison map into it. The bundle
itself is never represented; its only computational influence would be
through higher differentials, which are caller input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .abelian import (
    FGModule,
    LocalizationRing,
    direct_sum,
    is_isomorphism,
)
from .coefficients import (
    CoefficientMap,
    GradedCoefficientSystem,
    colimit_system,
    localize_coefficient_map,
    localize_system,
)
from .errors import (
    DegreeOutOfRange,
    HypothesisNotAcknowledged,
    NotStabilized,
    ShapeMismatch,
)
from .simplicial import SimplicialComplex, SimplicialMap, cohomology
from .spectral import (
    DEFAULT_DEGREE_CEILING,
    AbutmentReport,
    Bidegree,
    ComparisonVerdict,
    DifferentialSupplier,
    PageMorphism,
    SpectralPage,
    comparison_verdict,
    page_morphism_from_coefficients,
    page_morphism_from_map,
    second_page,
)


@dataclass(frozen=True)
class SectionProblem:
    """Input data for the homotopy and K-theory pipelines.

    ``system`` plays the role of the fibre's graded homotopy;
    ``stabilized_system`` (always together with ``comparison``) plays the
    role of its shifted K-theory. ``ring`` is the localization applied
    throughout.
    """

    complex: SimplicialComplex
    system: GradedCoefficientSystem
    ring: LocalizationRing
    bott_stable_flag: bool | None = None
    stabilized_system: GradedCoefficientSystem | None = None
    comparison: CoefficientMap | None = None

    def __post_init__(self):
        if (self.stabilized_system is None) != (self.comparison is None):
            raise ShapeMismatch(
                "stabilized system and comparison map come together or not at all"
            )
        if not self.ring.refines(self.system.ring):
            raise ShapeMismatch(
                f"problem ring {self.ring.label} does not refine the system ring "
                f"{self.system.ring.label}"
            )
        if self.stabilized_system is not None:
            if self.stabilized_system.ring != self.system.ring:
                raise ShapeMismatch("stabilized system lives over a different ring")
            if (
                self.comparison.source != self.system
                or self.comparison.target != self.stabilized_system
            ):
                raise ShapeMismatch("comparison map does not connect the two systems")


def homotopy_e2_page(
    problem: SectionProblem, degree_ceiling: int = DEFAULT_DEGREE_CEILING
) -> SpectralPage:
    """The cohomology page with the fibre's homotopy coefficients."""
    system = localize_system(problem.system, problem.ring)
    return second_page(problem.complex, system, degree_ceiling)


def ktheory_e2_page(
    problem: SectionProblem,
    degree_ceiling: int = DEFAULT_DEGREE_CEILING,
    system_tower: Sequence[tuple[GradedCoefficientSystem, CoefficientMap | None]] | None = None,
) -> SpectralPage:
    """The cohomology page with stabilized coefficients.

    The stabilized system may be given on the problem or derived from a
    finite stabilization tower. When a tower is supplied, the stage-wise
    pages and their induced morphisms are additionally checked to
    stabilize onto the constructed page within the tower's range.
    """
    stabilized = problem.stabilized_system
    if stabilized is None:
        if system_tower is None:
            raise ShapeMismatch(
                "no stabilized system on the problem and no tower to take a colimit of"
            )
        stabilized = colimit_system(system_tower)
    page = second_page(
        problem.complex, localize_system(stabilized, problem.ring), degree_ceiling
    )
    if system_tower is not None:
        _verify_tower_stabilizes_to(problem.complex, system_tower, problem.ring, page, degree_ceiling)
    return page


def _verify_tower_stabilizes_to(
    complex_: SimplicialComplex,
    system_tower: Sequence[tuple[GradedCoefficientSystem, CoefficientMap | None]],
    ring: LocalizationRing,
    constructed: SpectralPage,
    degree_ceiling: int,
) -> None:
    stage_pages = [
        second_page(complex_, localize_system(system, ring), degree_ceiling)
        for system, _ in system_tower
    ]
    morphisms = [
        page_morphism_from_coefficients(
            complex_, localize_coefficient_map(connecting, ring), degree_ceiling
        )
        for _, connecting in system_tower[1:]
        if connecting is not None
    ]
    final = stage_pages[-1]
    offenders = []
    for at in constructed.bidegrees():
        if at[1] > final.q_max:
            continue  # outside the tower's range: nothing to verify against
        if final.entry(at) != constructed.entry(at):
            offenders.append(at)
            continue
        last = _last_mutually_defined_component(morphisms, at)
        if last is not None and not is_isomorphism(last):
            offenders.append(at)
    if offenders:
        raise NotStabilized(
            f"stage pages do not stabilize onto the constructed page at {offenders}",
            bidegrees=offenders,
        )


def _last_mutually_defined_component(morphisms: Sequence[PageMorphism], at: Bidegree):
    last = None
    for m in morphisms:
        if at[1] <= m.source.q_max and at[1] <= m.target.q_max:
            last = m.component(at)
    return last


def collapse_rational(
    complex_: SimplicialComplex,
    system: GradedCoefficientSystem,
    acknowledge_hspace_hypothesis: bool = False,
    degree_ceiling: int = DEFAULT_DEGREE_CEILING,
) -> dict[int, int]:
    """Rational dimensions of the abutment when the sequence collapses.

    For each reported total degree n the value is the dimension of the
    sum over columns p of H^p(X; Q) tensored with the rationalized
    degree-(n+p) coefficients. The collapse itself is a hypothesis about
    the situation (a group-like rational classifying space) that the
    engine cannot check; the caller must acknowledge asserting it.
    """
    if not acknowledge_hspace_hypothesis:
        raise HypothesisNotAcknowledged(
            "rational collapse requires acknowledging its classifying-space hypothesis"
        )
    rationals = LocalizationRing.rationals()
    q_module = FGModule.free(rationals, 1)
    dim = max(complex_.dimension, 0)
    betti = [cohomology(complex_, q_module, p).free_rank for p in range(dim + 1)]
    rational_system = localize_system(system, rationals)
    limit = degree_ceiling
    if system.stable_range_bound is not None:
        limit = min(limit, system.stable_range_bound - dim)
    table = {}
    for n in range(1, limit + 1):
        table[n] = sum(
            betti[p] * rational_system.evaluate(n + p).free_rank for p in range(dim + 1)
        )
    return table


@dataclass(frozen=True)
class BottStableReport:
    """Outcome of comparing the homotopy and K-theory pages.

    ``component_status`` records, per bidegree of the starting pages,
    whether the comparison map is an isomorphism there. On success the
    two abutments are attached; their graded pieces match degreewise.
    """

    verdict: ComparisonVerdict
    component_status: Mapping[Bidegree, bool]

    @property
    def status(self) -> str:
        return self.verdict.status

    def to_json(self) -> dict:
        out = self.verdict.to_json()
        out["component_status"] = {
            f"{s},{q}": ok
            for (s, q), ok in sorted(self.component_status.items(), key=lambda kv: (-kv[0][0], kv[0][1]))
        }
        return out


def bott_stable_verdict(
    problem: SectionProblem,
    suppliers: tuple[DifferentialSupplier | None, DifferentialSupplier | None] = (None, None),
    degree_ceiling: int = DEFAULT_DEGREE_CEILING,
) -> BottStableReport:
    """Propagate Bott-stability of the fibre to the section algebra.

    Builds both pages, the induced page morphism from the comparison
    map, and runs the comparison argument. An isomorphism on the whole
    starting page yields matching abutment gradings for the two
    pipelines; any failing bidegree is reported as such.
    """
    if problem.comparison is None:
        raise ShapeMismatch("the problem carries no comparison map")
    localized = localize_coefficient_map(problem.comparison, problem.ring)
    morphism = page_morphism_from_coefficients(problem.complex, localized, degree_ceiling)
    status = {at: is_isomorphism(morphism.component(at)) for at in morphism.support()}
    dim = max(problem.complex.dimension, 0)
    verdict = comparison_verdict(morphism, dim, suppliers, degree_ceiling)
    return BottStableReport(verdict, status)


@dataclass(frozen=True)
class Tower:
    """An inverse sequence of complexes; maps[j] runs stage j+1 -> stage j."""

    stages: tuple[SimplicialComplex, ...]
    maps: tuple[SimplicialMap, ...]

    def __post_init__(self):
        if not self.stages:
            raise ShapeMismatch("a tower needs at least one stage")
        if len(self.maps) != len(self.stages) - 1:
            raise ShapeMismatch("a tower with k stages carries k-1 maps")
        for j, f in enumerate(self.maps):
            if f.source != self.stages[j + 1] or f.target != self.stages[j]:
                raise ShapeMismatch(f"map {j} does not run stage {j + 1} -> stage {j}")


@dataclass(frozen=True)
class TowerPagesResult:
    """Stage pages with connecting morphisms and the stabilized page.

    ``morphisms[j]`` is induced contravariantly by ``tower.maps[j]`` and
    runs from the stage-j page to the stage-(j+1) page. The limit page is
    the deepest stage's page once every tracked bidegree has stabilized.
    """

    pages: tuple[SpectralPage, ...]
    morphisms: tuple[PageMorphism, ...]
    stabilized_bidegrees: tuple[Bidegree, ...]
    limit_page: SpectralPage


def tower_pages(
    tower: Tower,
    system: GradedCoefficientSystem,
    ring: LocalizationRing,
    degree_ceiling: int = DEFAULT_DEGREE_CEILING,
) -> TowerPagesResult:
    """Stage-wise pages of a tower and their stabilization report.

    Tracked bidegrees are those of the deepest page. Each must have its
    last mutually-defined connecting component an isomorphism (bidegrees
    seen by a single stage stabilize vacuously); otherwise the tower's
    limit is not representable here and NOT_STABILIZED reports exactly
    where.
    """
    localized = localize_system(system, ring)
    pages = tuple(second_page(stage, localized, degree_ceiling) for stage in tower.stages)
    morphisms = tuple(
        page_morphism_from_map(f, localized, degree_ceiling) for f in tower.maps
    )
    final = pages[-1]
    offenders = []
    tracked = []
    for at in final.bidegrees():
        last = _last_mutually_defined_component(morphisms, at)
        if last is None or is_isomorphism(last):
            tracked.append(at)
        else:
            offenders.append(at)
    if offenders:
        raise NotStabilized(
            f"tower connecting maps never become isomorphisms at {offenders}",
            bidegrees=offenders,
        )
    return TowerPagesResult(pages, morphisms, tuple(tracked), final)


def unitization_correction(complex_: SimplicialComplex, j: int) -> FGModule:
    """The split summand relating homotopy before and after unitization.

    In degrees 0 and 1 the difference is integral cohomology in the
    complementary degree 1-j; higher degrees need no correction.
    """
    if j not in (0, 1):
        raise DegreeOutOfRange(
            f"unitization correction is defined for degrees 0 and 1, not {j}", degree=j
        )
    z_module = FGModule.free(LocalizationRing.integers(), 1)
    return cohomology(complex_, z_module, 1 - j)


def unitized_homotopy(complex_: SimplicialComplex, j: int, base: FGModule) -> FGModule:
    """Homotopy after unitization: the given group plus the split
    correction summand."""
    return direct_sum([base, unitization_correction(complex_, j)])


def invertible_scalars_homotopy(complex_: SimplicialComplex, j: int) -> FGModule:
    """Homotopy of the group of invertible scalar functions on X.

    The nonzero complex numbers are a circle up to homotopy, so the
    function space has components counted by H^1, fundamental group H^0
    (by winding in each component), and nothing above.
    """
    if j < 0:
        raise DegreeOutOfRange(f"homotopy degrees start at 0, not {j}", degree=j)
    z_module = FGModule.free(LocalizationRing.integers(), 1)
    if j == 0:
        return cohomology(complex_, z_module, 1)
    if j == 1:
        return cohomology(complex_, z_module, 0)
    return FGModule.zero(LocalizationRing.integers())
