"""Graded coefficient systems and their stabilization towers.

A system assigns a module to every degree q >= 1 (degree 0 is always
zero: these gradings track homotopy of a path-connected group). Systems
are either finitely supported, periodic with period 2 or 8, or truncated
at a stable-range bound beyond which evaluation refuses rather than
guesses.

The built-in atlas values are fixture data checked against the published
stable homotopy tables; nothing here computes homotopy groups from an
algebra presentation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .abelian import (
    FGModule,
    LocalizationRing,
    ModuleHom,
    is_isomorphism,
    localize_hom,
    tensor_localize,
)
from .errors import NotStabilized, ShapeMismatch, StableRangeExceeded, UnknownAtlas

BUILTIN_NAMES = ("gl1-complex", "ku-stable", "ko-stable", "zero", "unitary-<n>")


@dataclass(frozen=True)
class GradedCoefficientSystem:
    """A map q -> module for q >= 1, finitely supported unless periodic.

    ``period`` (2 or 8) extends the window 1..period to all q.
    ``stable_range_bound`` marks the last q with a defined value; beyond
    it evaluation raises STABLE_RANGE_EXCEEDED. A system cannot be both
    periodic and range-bounded.
    """

    label: str
    ring: LocalizationRing
    groups: Mapping[int, FGModule] = field(default_factory=dict)
    period: int | None = None
    stable_range_bound: int | None = None

    def __post_init__(self):
        cleaned = {}
        for q, module in self.groups.items():
            q = int(q)
            if q < 1:
                raise ValueError("graded entries start at q = 1")
            if module.ring != self.ring:
                raise ValueError("entry ring disagrees with the system ring")
            if not module.is_zero():
                cleaned[q] = module
        object.__setattr__(self, "groups", cleaned)
        if self.period is not None:
            if self.period not in (2, 8):
                raise ValueError("period must be 2 or 8")
            if self.stable_range_bound is not None:
                raise ValueError("a system cannot be periodic and range-bounded")
            if any(q > self.period for q in cleaned):
                raise ValueError("periodic systems are specified on one period")
        if self.stable_range_bound is not None:
            if self.stable_range_bound < 1:
                raise ValueError("stable range bound must be >= 1")
            if any(q > self.stable_range_bound for q in cleaned):
                raise ValueError("entry beyond the stable range bound")

    def evaluate(self, q: int) -> FGModule:
        """The module at degree q; zero below 1, error beyond the bound."""
        if q <= 0:
            return FGModule.zero(self.ring)
        if self.stable_range_bound is not None and q > self.stable_range_bound:
            raise StableRangeExceeded(
                f"{self.label} is undefined at q={q} (stable range ends at "
                f"{self.stable_range_bound})",
                system=self.label,
                degree=q,
            )
        if self.period is not None:
            q = (q - 1) % self.period + 1
        return self.groups.get(q, FGModule.zero(self.ring))

    __call__ = evaluate

    def defined_at(self, q: int) -> bool:
        return q >= 0 and (self.stable_range_bound is None or q <= self.stable_range_bound)

    def max_degree(self, ceiling: int) -> int:
        """Largest degree <= ceiling at which the system is defined."""
        if self.stable_range_bound is None:
            return ceiling
        return min(ceiling, self.stable_range_bound)

    def support(self, up_to: int) -> list[int]:
        return [q for q in range(1, self.max_degree(up_to) + 1) if not self.evaluate(q).is_zero()]

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "ring": self.ring.to_json(),
            "groups": {str(q): m.to_json() for q, m in sorted(self.groups.items())},
            "period": self.period,
            "stable_bound": self.stable_range_bound,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GradedCoefficientSystem":
        ring = LocalizationRing.from_json(obj.get("ring", "Z"))
        groups = {
            int(q): FGModule.from_json(m, ring) for q, m in obj.get("groups", {}).items()
        }
        return cls(
            label=obj.get("label", "custom"),
            ring=ring,
            groups=groups,
            period=obj.get("period"),
            stable_range_bound=obj.get("stable_bound"),
        )


def load_system(path_or_obj) -> GradedCoefficientSystem:
    if isinstance(path_or_obj, dict):
        return GradedCoefficientSystem.from_json(path_or_obj)
    with open(path_or_obj, "r", encoding="utf-8") as fh:
        return GradedCoefficientSystem.from_json(json.load(fh))


def builtin(name: str, ring: LocalizationRing | None = None) -> GradedCoefficientSystem:
    """The built-in atlas.

    * ``gl1-complex``: Z in degree 1, zero elsewhere (invertible scalar
      functions; the punctured plane has contractible universal cover).
    * ``unitary-n``: Z at odd q through the stable range q <= 2n-1, zero
      at even q below it, refusal beyond it.
    * ``ku-stable``: period 2, Z at odd q.
    * ``ko-stable``: period 8 with the stable orthogonal pattern
      (q mod 8 = 0,1 -> Z/2; 3,7 -> Z; else 0).
    * ``zero``: the zero system.
    """
    ring = ring or LocalizationRing.integers()
    z = FGModule.free(ring, 1)
    z2 = _cyclic(ring, 2)
    if name == "gl1-complex":
        return GradedCoefficientSystem("gl1-complex", ring, {1: z})
    if name == "ku-stable":
        return GradedCoefficientSystem("ku-stable", ring, {1: z}, period=2)
    if name == "ko-stable":
        return GradedCoefficientSystem(
            "ko-stable", ring, {1: z2, 3: z, 7: z, 8: z2}, period=8
        )
    if name == "zero":
        return GradedCoefficientSystem("zero", ring, {})
    if name.startswith("unitary-"):
        try:
            n = int(name.split("-", 1)[1])
        except ValueError:
            raise UnknownAtlas(f"bad unitary index in {name!r}", name=name) from None
        if n < 1:
            raise UnknownAtlas(f"unitary index must be >= 1 in {name!r}", name=name)
        bound = 2 * n - 1
        groups = {q: z for q in range(1, bound + 1, 2)}
        return GradedCoefficientSystem(name, ring, groups, stable_range_bound=bound)
    raise UnknownAtlas(f"unknown coefficient system {name!r}", name=name, known=BUILTIN_NAMES)


def _cyclic(ring: LocalizationRing, order: int) -> FGModule:
    return FGModule.from_orders(ring, 0, [order])


def localize_system(
    system: GradedCoefficientSystem, ring: LocalizationRing
) -> GradedCoefficientSystem:
    """Entrywise base change of the whole system."""
    groups = {q: tensor_localize(m, ring) for q, m in system.groups.items()}
    label = system.label if ring == system.ring else f"{system.label} over {ring.label}"
    return GradedCoefficientSystem(
        label, ring, groups, period=system.period, stable_range_bound=system.stable_range_bound
    )


@dataclass(frozen=True)
class CoefficientMap:
    """A degreewise homomorphism between two coefficient systems.

    Components are stored only at degrees where either side is nonzero;
    a missing component is the zero map. Where both sides are defined the
    stored component's endpoints must match the systems' entries.
    """

    source: GradedCoefficientSystem
    target: GradedCoefficientSystem
    maps: Mapping[int, ModuleHom] = field(default_factory=dict)

    def __post_init__(self):
        if self.source.ring != self.target.ring:
            raise ShapeMismatch("coefficient map between different rings")
        cleaned = {}
        for q, hom in self.maps.items():
            q = int(q)
            if hom.domain != self.source.evaluate(q) or hom.codomain != self.target.evaluate(q):
                raise ShapeMismatch(
                    f"component at q={q} does not match the systems' entries", degree=q
                )
            if not hom.is_zero_hom():
                cleaned[q] = hom
        object.__setattr__(self, "maps", cleaned)

    def component(self, q: int) -> ModuleHom:
        if q in self.maps:
            return self.maps[q]
        return ModuleHom.zero(self.source.evaluate(q), self.target.evaluate(q))

    @classmethod
    def identity(cls, system: GradedCoefficientSystem, up_to: int) -> "CoefficientMap":
        maps = {
            q: ModuleHom.identity(system.evaluate(q))
            for q in range(1, system.max_degree(up_to) + 1)
        }
        return cls(system, system, maps)


def localize_coefficient_map(m: CoefficientMap, ring: LocalizationRing) -> CoefficientMap:
    return CoefficientMap(
        localize_system(m.source, ring),
        localize_system(m.target, ring),
        {q: localize_hom(h, ring) for q, h in m.maps.items()},
    )


def stabilization_tower(
    n_max: int, ring: LocalizationRing | None = None
) -> list[tuple[GradedCoefficientSystem, CoefficientMap | None]]:
    """The unitary tower unitary-1 -> ... -> unitary-n_max.

    Connecting maps are identities on the shared stable range; the
    unstable fringe is simply not encoded, so each map is an isomorphism
    wherever both stages are defined.
    """
    if n_max < 1:
        raise ValueError("tower needs at least one stage")
    ring = ring or LocalizationRing.integers()
    stages: list[tuple[GradedCoefficientSystem, CoefficientMap | None]] = []
    previous: GradedCoefficientSystem | None = None
    for n in range(1, n_max + 1):
        system = builtin(f"unitary-{n}", ring)
        connecting = None
        if previous is not None:
            shared = previous.stable_range_bound or 0
            maps = {
                q: ModuleHom.identity(previous.evaluate(q)) for q in range(1, shared + 1)
            }
            connecting = CoefficientMap(previous, system, maps)
        stages.append((system, connecting))
        previous = system
    return stages


def colimit_system(
    tower: Sequence[tuple[GradedCoefficientSystem, CoefficientMap | None]]
) -> GradedCoefficientSystem:
    """The eventual value of a tower of systems.

    The direct limit of a finite tower is its last stage; what this
    operation adds is stabilization evidence. A degree counts as
    stabilized when the final connecting map defined there is an
    isomorphism (degrees seen by fewer than two stages are vacuously
    stable). Degrees still changing at the last supplied stage raise
    NOT_STABILIZED.
    """
    if not tower:
        raise ValueError("empty tower")
    systems = [s for s, _ in tower]
    final = systems[-1]
    offenders = []
    for q in range(1, _tower_ceiling(tower) + 1):
        last_map = None
        for earlier, (later, connecting) in zip(systems, tower[1:]):
            if connecting is None:
                continue
            if earlier.defined_at(q) and later.defined_at(q):
                last_map = connecting.component(q)
        if last_map is not None and not is_isomorphism(last_map):
            offenders.append(q)
    if offenders:
        raise NotStabilized(
            f"tower never reaches isomorphisms at q={offenders}", degrees=offenders
        )
    from dataclasses import replace

    return replace(final, label=f"colim({systems[0].label}..{final.label})")


def _tower_ceiling(
    tower: Sequence[tuple[GradedCoefficientSystem, CoefficientMap | None]]
) -> int:
    """Largest degree at which connecting maps carry fresh evidence.

    Bounded systems contribute their bound; periodic and finitely
    supported ones repeat beyond their period or support, so checking
    past it adds nothing.
    """
    ceiling = 0
    for system, connecting in tower:
        if system.stable_range_bound is not None:
            ceiling = max(ceiling, system.stable_range_bound)
        else:
            ceiling = max(ceiling, system.period or 0, *system.groups, *[0])
        if connecting is not None:
            ceiling = max(ceiling, *connecting.maps, *[0])
    return ceiling
