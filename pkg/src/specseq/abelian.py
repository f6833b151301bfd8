"""Finitely generated modules over localizations of the integers.

A module is stored only as its isomorphism class in canonical form: a
free rank plus a tuple of prime-power torsion orders at primes that are
not inverted. Homomorphisms are integer matrices written against the
canonical generators (free generators first, then one generator per
torsion order). Elements are never materialized.

The subquotient operation additionally returns section data: enough of a
coordinate system to push ambient-level maps down to maps between
subquotients. That is what lets induced maps ride along when spectral
pages are turned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CompositionNonzero, RefinementError, ShapeMismatch
from .intmat import IntMatrix, kernel_basis, smith_normal_form, solve

_SMALL_FACTOR_LIMIT = 10**6


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of ``n >= 1`` as ``{prime: exponent}``.

    Trial division covers every order this engine produces in practice;
    sympy's factorint is the fallback for adversarially large inputs.
    """
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    if n == 1:
        return {}
    if n > _SMALL_FACTOR_LIMIT:
        from sympy import factorint

        return {int(p): int(e) for p, e in factorint(n).items()}
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factorize(n) == {n: 1}


def _modinv(a: int, m: int) -> int:
    g, x = _extended_gcd(a % m, m)
    if g != 1:
        raise ValueError(f"{a} is not invertible mod {m}")
    return x % m


def _extended_gcd(a: int, b: int) -> tuple[int, int]:
    # Returns (g, x) with a*x == g (mod b).
    old_r, r = a, b
    old_x, x = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
    return old_r, old_x


@dataclass(frozen=True)
class LocalizationRing:
    """The integers with a set of primes inverted; ``all_primes`` is Q.

    The empty set is Z itself. Only the set of inverted primes matters:
    two rings are equal exactly when they invert the same primes.
    """

    inverted: frozenset[int] = frozenset()
    all_primes: bool = False

    def __post_init__(self):
        if self.all_primes and self.inverted:
            object.__setattr__(self, "inverted", frozenset())
        for p in self.inverted:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")

    @classmethod
    def integers(cls) -> "LocalizationRing":
        return cls()

    @classmethod
    def rationals(cls) -> "LocalizationRing":
        return cls(all_primes=True)

    @classmethod
    def inverting(cls, *primes: int) -> "LocalizationRing":
        return cls(inverted=frozenset(primes))

    def invertible(self, p: int) -> bool:
        return self.all_primes or p in self.inverted

    def refines(self, other: "LocalizationRing") -> bool:
        """True when self inverts at least the primes other inverts."""
        if self.all_primes:
            return True
        if other.all_primes:
            return False
        return other.inverted <= self.inverted

    @property
    def label(self) -> str:
        if self.all_primes:
            return "Q"
        if not self.inverted:
            return "Z"
        return "Z[" + ",".join(f"1/{p}" for p in sorted(self.inverted)) + "]"

    def to_json(self):
        if self.all_primes:
            return "Q"
        if not self.inverted:
            return "Z"
        return {"invert": sorted(self.inverted)}

    @classmethod
    def from_json(cls, obj) -> "LocalizationRing":
        if obj == "Q":
            return cls.rationals()
        if obj == "Z":
            return cls.integers()
        if isinstance(obj, dict) and "invert" in obj:
            return cls.inverting(*obj["invert"])
        raise ValueError(f"unrecognized ring description: {obj!r}")

    def __repr__(self) -> str:
        return f"LocalizationRing({self.label})"


def _torsion_key(order: int) -> tuple[int, int]:
    ((p, e),) = factorize(order).items()
    return (p, e)


@dataclass(frozen=True)
class FGModule:
    """Canonical form of a finitely generated module: rank plus torsion.

    ``torsion_orders`` holds prime powers sorted ascending by
    (prime, exponent); primes invertible in the ring are not allowed.
    Equality of values is isomorphism of modules.
    """

    ring: LocalizationRing
    free_rank: int
    torsion_orders: tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        orders = tuple(sorted(self.torsion_orders, key=_torsion_key))
        for q in orders:
            if q <= 1:
                raise ValueError(f"torsion order {q} is not a prime power > 1")
            (p, _), = factorize(q).items()
            if self.ring.invertible(p):
                raise ValueError(f"torsion order {q} lives at an inverted prime")
        object.__setattr__(self, "torsion_orders", orders)

    @classmethod
    def zero(cls, ring: LocalizationRing) -> "FGModule":
        return cls(ring, 0)

    @classmethod
    def free(cls, ring: LocalizationRing, rank: int) -> "FGModule":
        return cls(ring, rank)

    @classmethod
    def from_orders(cls, ring: LocalizationRing, rank: int, orders: Iterable[int]) -> "FGModule":
        """Build from arbitrary cyclic orders, splitting into prime powers
        and dropping the parts that the ring makes invertible."""
        torsion: list[int] = []
        for d in orders:
            if d in (0, 1):
                if d == 0:
                    rank += 1
                continue
            for p, e in factorize(abs(d)).items():
                if not ring.invertible(p):
                    torsion.append(p**e)
        return cls(ring, rank, tuple(torsion))

    @property
    def ngens(self) -> int:
        return self.free_rank + len(self.torsion_orders)

    def generator_orders(self) -> tuple[int, ...]:
        """Relation order per canonical generator; 0 marks a free one."""
        return (0,) * self.free_rank + self.torsion_orders

    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion_orders

    def invariant_factors(self) -> list[int]:
        """Torsion regrouped as d1 | d2 | ... (largest last), the exported
        invariant-factor view of the prime-power canonical form."""
        by_prime: dict[int, list[int]] = {}
        for q in self.torsion_orders:
            p, _ = _torsion_key(q)
            by_prime.setdefault(p, []).append(q)
        for qs in by_prime.values():
            qs.sort()
        factors: list[int] = []
        while any(by_prime.values()):
            d = 1
            for qs in by_prime.values():
                if qs:
                    d *= qs.pop()
            factors.append(d)
        factors.reverse()
        return factors

    def to_json(self) -> dict:
        return {"rank": self.free_rank, "torsion": list(self.torsion_orders)}

    @classmethod
    def from_json(cls, obj: dict, ring: LocalizationRing) -> "FGModule":
        return cls.from_orders(ring, int(obj["rank"]), [int(t) for t in obj.get("torsion", [])])

    def __str__(self) -> str:
        from .render import module_label

        return module_label(self)


def tensor_localize(module: FGModule, ring: LocalizationRing) -> FGModule:
    """Base change along Z[S^-1] -> Z[T^-1] for S a subset of T.

    Free rank is preserved; torsion at newly inverted primes dies.
    """
    if not ring.refines(module.ring):
        raise RefinementError(
            f"cannot localize a {module.ring.label}-module down to {ring.label}",
            source=module.ring.label,
            target=ring.label,
        )
    kept = tuple(q for q in module.torsion_orders if not ring.invertible(_torsion_key(q)[0]))
    return FGModule(ring, module.free_rank, kept)


def direct_sum(summands: Sequence[FGModule]) -> FGModule:
    if not summands:
        raise ShapeMismatch("direct sum of an empty list has no ring")
    ring = summands[0].ring
    for s in summands[1:]:
        if s.ring != ring:
            raise ShapeMismatch("direct summands live over different rings")
    rank = sum(s.free_rank for s in summands)
    torsion = tuple(q for s in summands for q in s.torsion_orders)
    return FGModule(ring, rank, torsion)


def sum_of_copies(module: FGModule, count: int) -> tuple[FGModule, dict[tuple[int, int], int]]:
    """``count`` copies of a module, with a map from (copy, generator)
    pairs to positions among the sum's canonical generators.

    The position map is what keeps Kronecker-style block matrices honest
    after the canonical form re-sorts the combined torsion orders.
    """
    if count < 0:
        raise ValueError("negative copy count")
    f = module.free_rank
    positions: dict[tuple[int, int], int] = {}
    for c in range(count):
        for a in range(f):
            positions[(c, a)] = c * f + a
    items = []
    for j, q in enumerate(module.torsion_orders):
        for c in range(count):
            items.append((_torsion_key(q), c, j, q))
    items.sort(key=lambda t: (t[0], t[1], t[2]))
    for pos, (_, c, j, _) in enumerate(items):
        positions[(c, f + j)] = count * f + pos
    total = FGModule(module.ring, count * f, tuple(q for (_, _, _, q) in items))
    return total, positions


def relation_matrix(module: FGModule) -> IntMatrix:
    """Columns generate the relations among the canonical generators."""
    n = module.ngens
    cols = []
    for j, q in enumerate(module.torsion_orders):
        col = [0] * n
        col[module.free_rank + j] = q
        cols.append(col)
    return IntMatrix.from_columns(cols, n)


@dataclass(frozen=True)
class ModuleHom:
    """A homomorphism given by an integer matrix on canonical generators.

    The matrix has one row per codomain generator and one column per
    domain generator. Entries in torsion rows are normalized to
    ``[0, order)``; well-definedness (each domain torsion generator of
    order m maps to an element killed by m) is enforced at construction.
    """

    domain: FGModule
    codomain: FGModule
    matrix: IntMatrix

    def __post_init__(self):
        if self.domain.ring != self.codomain.ring:
            raise ShapeMismatch("hom between modules over different rings")
        if self.matrix.shape != (self.codomain.ngens, self.domain.ngens):
            raise ShapeMismatch(
                f"matrix shape {self.matrix.shape} does not match "
                f"{self.codomain.ngens} x {self.domain.ngens} generators"
            )
        cod_orders = self.codomain.generator_orders()
        rows = []
        for i, row in enumerate(self.matrix.rows):
            r = cod_orders[i]
            rows.append([x % r for x in row] if r else list(row))
        normalized = IntMatrix(rows, self.matrix.ncols)
        object.__setattr__(self, "matrix", normalized)
        for j, m in enumerate(self.domain.generator_orders()):
            if m == 0:
                continue
            for i, r in enumerate(cod_orders):
                x = normalized.rows[i][j]
                if r == 0:
                    if m * x != 0:
                        raise ShapeMismatch(
                            f"column {j} of order {m} hits a free generator"
                        )
                elif (m * x) % r != 0:
                    raise ShapeMismatch(
                        f"entry ({i},{j}) breaks well-definedness: "
                        f"{m}*{x} is nonzero mod {r}"
                    )

    @classmethod
    def zero(cls, domain: FGModule, codomain: FGModule) -> "ModuleHom":
        return cls(domain, codomain, IntMatrix.zeros(codomain.ngens, domain.ngens))

    @classmethod
    def identity(cls, module: FGModule) -> "ModuleHom":
        return cls(module, module, IntMatrix.identity(module.ngens))

    def is_zero_hom(self) -> bool:
        return self.matrix.is_zero()

    def equals(self, other: "ModuleHom") -> bool:
        return (
            self.domain == other.domain
            and self.codomain == other.codomain
            and self.matrix == other.matrix
        )


def compose(outer: ModuleHom, inner: ModuleHom) -> ModuleHom:
    """The composite ``outer after inner`` (matrix product order)."""
    if inner.codomain != outer.domain:
        raise ShapeMismatch("composition shape mismatch")
    return ModuleHom(inner.domain, outer.codomain, outer.matrix @ inner.matrix)


def hom_difference(f: ModuleHom, g: ModuleHom) -> ModuleHom:
    if f.domain != g.domain or f.codomain != g.codomain:
        raise ShapeMismatch("difference of homs with different shapes")
    return ModuleHom(f.domain, f.codomain, f.matrix.add(g.matrix.neg()))


def localize_hom(f: ModuleHom, ring: LocalizationRing) -> ModuleHom:
    """Base change of a hom: keep only rows/columns of generators that
    survive localization."""
    dom = tensor_localize(f.domain, ring)
    cod = tensor_localize(f.codomain, ring)

    def surviving(module: FGModule) -> list[int]:
        keep = list(range(module.free_rank))
        for j, q in enumerate(module.torsion_orders):
            if not ring.invertible(_torsion_key(q)[0]):
                keep.append(module.free_rank + j)
        return keep

    rows = surviving(f.codomain)
    cols = surviving(f.domain)
    picked = [[f.matrix.rows[i][j] for j in cols] for i in rows]
    return ModuleHom(dom, cod, IntMatrix(picked, len(cols)))


def smith_normal_form_triplet(matrix: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """(U, D, V) with D = U M V, U and V unimodular, D a non-negative
    diagonal with d1 | d2 | ... (empty matrices pass straight through)."""
    snf = smith_normal_form(matrix)
    return snf.left, snf.diag, snf.right


def cokernel(matrix: IntMatrix, ring: LocalizationRing) -> FGModule:
    """Canonical form of (free module on the rows) / (column span)."""
    snf = smith_normal_form(matrix)
    diag = snf.diagonal()
    rank = matrix.nrows - sum(1 for d in diag if d != 0)
    return FGModule.from_orders(ring, rank, [d for d in diag if d > 1])


@dataclass(frozen=True)
class SubquotientSections:
    """Coordinate data identifying a subquotient ker/im inside its ambient
    module.

    ``lift`` sends canonical coordinates of the subquotient to ambient
    generator coordinates (choosing coset representatives); ``project``
    sends an ambient element known to lie in the kernel to canonical
    subquotient coordinates. Both are exact, and together they transport
    ambient-level homs to homs of subquotients.
    """

    ambient: FGModule
    module: FGModule
    kernel_gens: IntMatrix = field(repr=False)
    to_diag: IntMatrix = field(repr=False)
    from_diag: IntMatrix = field(repr=False)
    diag_orders: tuple[int, ...] = field(repr=False)
    # Canonical generator layout: free generators list their diagonal
    # index; torsion generators carry (diagonal index, prime power,
    # CRT unit lifting the prime-power summand into Z/d).
    free_layout: tuple[int, ...] = field(repr=False)
    torsion_layout: tuple[tuple[int, int, int], ...] = field(repr=False)

    def lift(self, coords: Sequence[int]) -> list[int]:
        if len(coords) != self.module.ngens:
            raise ShapeMismatch("coordinate length mismatch in lift")
        s = len(self.diag_orders)
        y = [0] * s
        for pos, idx in enumerate(self.free_layout):
            y[idx] += coords[pos]
        for pos, (idx, q, unit) in enumerate(self.torsion_layout):
            y[idx] += coords[self.module.free_rank + pos] * unit
        w = self.from_diag.apply(y)
        return self.kernel_gens.apply(w)

    def project(self, vector: Sequence[int]) -> list[int]:
        w = solve(self.kernel_gens, list(vector))
        if w is None:
            raise ValueError("vector does not lie in the tracked kernel")
        y = self.to_diag.apply(w)
        coords = [y[idx] for idx in self.free_layout]
        coords += [y[idx] % q for (idx, q, _) in self.torsion_layout]
        return coords


def subquotient(d_in: ModuleHom, d_out: ModuleHom) -> tuple[FGModule, SubquotientSections]:
    """Canonical form of ker(d_out)/im(d_in) plus its section data.

    Requires codomain(d_in) == domain(d_out) and d_out . d_in == 0.
    """
    if d_in.codomain != d_out.domain:
        raise ShapeMismatch("subquotient: middle modules disagree")
    if not compose(d_out, d_in).is_zero_hom():
        raise CompositionNonzero("d_out composed with d_in is not zero")

    middle = d_in.codomain
    ring = middle.ring
    rel_mid = relation_matrix(middle)
    rel_out = relation_matrix(d_out.codomain)

    # Kernel of d_out as a subgroup of the generator lattice: project the
    # integer kernel of [M_out | R_out] onto the first block. Relations of
    # the middle module land here automatically.
    stacked = d_out.matrix.hstack(rel_out)
    kernel_gens = kernel_basis(stacked).take_rows(range(middle.ngens))

    # Relations among these kernel generators: combinations landing in
    # im(d_in) + relations of the middle module.
    s = kernel_gens.ncols
    stacked2 = kernel_gens.hstack(d_in.matrix).hstack(rel_mid)
    rel = kernel_basis(stacked2).take_rows(range(s))

    snf = smith_normal_form(rel)
    k = min(rel.nrows, rel.ncols)
    orders = tuple(snf.diag.rows[i][i] if i < k else 0 for i in range(s))

    free_layout = tuple(i for i, d in enumerate(orders) if d == 0)
    torsion_entries: list[tuple[tuple[int, int], int, int, int]] = []
    for i, d in enumerate(orders):
        if d <= 1:
            continue
        for p, e in factorize(d).items():
            if ring.invertible(p):
                continue
            q = p**e
            cofactor = d // q
            unit = cofactor * _modinv(cofactor, q) % d if cofactor > 1 else 1
            torsion_entries.append(((p, e), i, q, unit))
    torsion_entries.sort(key=lambda t: (t[0], t[1]))

    module = FGModule(ring, len(free_layout), tuple(q for (_, _, q, _) in torsion_entries))
    sections = SubquotientSections(
        ambient=middle,
        module=module,
        kernel_gens=kernel_gens,
        to_diag=snf.left,
        from_diag=snf.left_inv,
        diag_orders=orders,
        free_layout=free_layout,
        torsion_layout=tuple((i, q, unit) for (_, i, q, unit) in torsion_entries),
    )
    return module, sections


def induced_hom(
    source: SubquotientSections, target: SubquotientSections, ambient_hom: ModuleHom
) -> ModuleHom:
    """Push an ambient hom down to the subquotients on both sides.

    Only valid when the ambient hom carries the tracked kernel into the
    tracked kernel and images into images, which is exactly the
    commutation condition checked by callers.
    """
    if ambient_hom.domain != source.ambient or ambient_hom.codomain != target.ambient:
        raise ShapeMismatch("ambient hom does not match the section data")
    cols = []
    n = source.module.ngens
    for j in range(n):
        unit = [1 if i == j else 0 for i in range(n)]
        image = ambient_hom.matrix.apply(source.lift(unit))
        cols.append(target.project(image))
    matrix = IntMatrix.from_columns(cols, target.module.ngens)
    return ModuleHom(source.module, target.module, matrix)


def kernel_module(f: ModuleHom) -> FGModule:
    """Canonical form of ker(f), computed as a subquotient over zero."""
    zero = ModuleHom.zero(FGModule.zero(f.domain.ring), f.domain)
    module, _ = subquotient(zero, f)
    return module


def cokernel_module(f: ModuleHom) -> FGModule:
    """Canonical form of coker(f) = codomain / (image + relations)."""
    stacked = f.matrix.hstack(relation_matrix(f.codomain))
    return cokernel(stacked, f.codomain.ring)


def is_isomorphism(f: ModuleHom) -> bool:
    """Exact bijectivity test via Smith form relative to the relations."""
    if f.domain.ring != f.codomain.ring:
        raise ShapeMismatch("isomorphism test across different rings")
    return kernel_module(f).is_zero() and cokernel_module(f).is_zero()


def hom_module(source: FGModule, target: FGModule) -> FGModule:
    """Hom(source, target) from canonical forms, summand by summand."""
    if source.ring != target.ring:
        raise ShapeMismatch("hom of modules over different rings")
    ring = target.ring
    rank = source.free_rank * target.free_rank
    torsion: list[int] = []
    torsion.extend(q for q in target.torsion_orders for _ in range(source.free_rank))
    for m in source.torsion_orders:
        for n in target.torsion_orders:
            g = _prime_power_gcd(m, n)
            if g > 1:
                torsion.append(g)
    return FGModule(ring, rank, tuple(torsion))


def ext_module(source: FGModule, target: FGModule) -> FGModule:
    """Ext^1(source, target) from canonical forms; free sources are
    projective, and Ext(Z/m, -) is computed cyclic piece by piece."""
    if source.ring != target.ring:
        raise ShapeMismatch("ext of modules over different rings")
    ring = target.ring
    torsion: list[int] = []
    torsion.extend(m for m in source.torsion_orders for _ in range(target.free_rank))
    for m in source.torsion_orders:
        for n in target.torsion_orders:
            g = _prime_power_gcd(m, n)
            if g > 1:
                torsion.append(g)
    return FGModule(ring, 0, tuple(torsion))


def _prime_power_gcd(m: int, n: int) -> int:
    (p, e) = _torsion_key(m)
    (q, f) = _torsion_key(n)
    if p != q:
        return 1
    return p ** min(e, f)
