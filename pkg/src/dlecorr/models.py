"""Finite perfect lattices of upsets, with brute-force semantic oracles.

A poset on n points (n small) gives the lattice of its upsets, encoded as
bitmasks over points: joins are unions, meets intersections.  Completely
join-irreducible elements are the principal upsets, completely
meet-irreducible ones the complements of principal downsets.  Every
finite distributive lattice arises this way, and a finite lattice is its
own canonical extension, so identities proved for canonical extensions
can be checked here exhaustively.

Operations for the signature's connectives are given by tables, by
relational generators (diamond/box of a binary relation on the points,
forced into the lattice with an upward closure/interior), or sampled
from values on irreducible tuples, which produces normal operations by
construction.  Defined modalities, their adjoints, residuals and the
lattice implications are computed from the tables by exhaustive adjoint
sweeps and cached.

Quantified checks (validity, pure quasi-inequalities, rule soundness)
enumerate valuations: propositional variables over all elements,
nominals over join-irreducibles, conominals over meet-irreducibles.  A
budget caps the number of valuations; exceeding it raises
BudgetExceeded rather than truncating silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations, product

from .language import (
    App, Arrow, BlackBox, BlackDia, BlackLhd, BlackRhd, Bot, Coimp,
    Conominal, DefBox, DefDia, DefLhd, DefRhd, DotBox, DotBoxAdj, DotDia,
    DotDiaAdj, DotLhd, DotLhdAdj, DotRhd, DotRhdAdj, Inequality, Join, Meet,
    Nominal, Residual, Signature, Term, Top, Var, conominals_of, free_vars,
    nominals_of,
)
from .engine import System
from .printing import print_inequality

MAX_POINTS = 8
DEFAULT_BUDGET = 10 ** 7


class ModelError(ValueError):
    pass


class NormalityError(ModelError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class Budget:
    def __init__(self, limit: int = DEFAULT_BUDGET):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1) -> None:
        self.used += n
        if self.used > self.limit:
            raise BudgetExceeded(f"quantifier budget of {self.limit} exceeded")


@dataclass(frozen=True)
class Poset:
    """Points 0..n-1; up[i] is the bitmask of {j : i <= j}."""

    n: int
    up: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (1 <= self.n <= MAX_POINTS):
            raise ModelError(f"poset size must be 1..{MAX_POINTS}")
        for i in range(self.n):
            if not self.up[i] & (1 << i):
                raise ModelError("order not reflexive")
            for j in range(self.n):
                if self.up[i] & (1 << j):
                    if i != j and self.up[j] & (1 << i):
                        raise ModelError("order not antisymmetric")
                    if self.up[j] & ~self.up[i]:
                        raise ModelError("order not transitive")

    def leq(self, i: int, j: int) -> bool:
        return bool(self.up[i] & (1 << j))

    def down(self, i: int) -> int:
        return sum(1 << j for j in range(self.n) if self.leq(j, i))

    def is_upset(self, mask: int) -> bool:
        return all(self.up[i] & mask == self.up[i] or not (mask & (1 << i))
                   for i in range(self.n))


def antichain(n: int) -> Poset:
    return Poset(n, tuple(1 << i for i in range(n)))


def chain(n: int) -> Poset:
    full = (1 << n) - 1
    return Poset(n, tuple(full & ~((1 << i) - 1) for i in range(n)))


def enumerate_posets(n: int, up_to_iso: bool = False) -> list[Poset]:
    """All posets on n labelled points, deterministic order; optionally
    one representative per isomorphism class."""
    if not (1 <= n <= 5):
        raise ModelError("poset enumeration supports 1..5 points")
    out: list[Poset] = []
    seen: set[tuple[int, ...]] = set()
    perms = list(permutations(range(n)))
    # candidate strict orders as lists of (i, j) pairs below the diagonal
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for bits in range(1 << len(pairs)):
        rel = [[i == j for j in range(n)] for i in range(n)]
        for k, (i, j) in enumerate(pairs):
            if bits & (1 << k):
                rel[i][j] = True
        ok = True
        for i in range(n):
            for j in range(n):
                if i != j and rel[i][j] and rel[j][i]:
                    ok = False
                for k in range(n):
                    if rel[i][j] and rel[j][k] and not rel[i][k]:
                        ok = False
        if not ok:
            continue
        up = tuple(sum(1 << j for j in range(n) if rel[i][j]) for i in range(n))
        if up_to_iso:
            canon = min(
                tuple(sorted(_permute_up(up, p, n))) for p in perms)
            if canon in seen:
                continue
            seen.add(canon)
        out.append(Poset(n, up))
    return out


def _permute_up(up: tuple[int, ...], perm: tuple[int, ...], n: int) -> tuple[int, ...]:
    def pmask(mask: int) -> int:
        return sum(1 << perm[j] for j in range(n) if mask & (1 << j))

    new = [0] * n
    for i in range(n):
        new[perm[i]] = pmask(up[i])
    return tuple(new)


@dataclass(frozen=True)
class Relation:
    """Binary relation on poset points, as successor-row bitmasks."""

    rows: tuple[int, ...]

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "Relation":
        rows = [0] * n
        for x, y in pairs:
            rows[x] |= 1 << y
        return cls(tuple(rows))

    def pairs(self) -> list[tuple[int, int]]:
        return [(x, y) for x, row in enumerate(self.rows)
                for y in range(len(self.rows)) if row & (1 << y)]


def diamond_of(poset: Poset, rel: Relation, mask: int) -> int:
    """Upward closure of the relational preimage; join-preserving and
    bottom-preserving on upsets by construction."""
    pre = 0
    for x in range(poset.n):
        if rel.rows[x] & mask:
            pre |= poset.up[x]
    return pre


def box_of(poset: Poset, rel: Relation, mask: int) -> int:
    """Largest upset inside {x : every successor of x lies in mask}."""
    core = sum(1 << x for x in range(poset.n) if rel.rows[x] & ~mask == 0)
    return sum(1 << x for x in range(poset.n) if poset.up[x] & ~core == 0)


@dataclass
class Valuation:
    var_map: dict[str, int] = field(default_factory=dict)
    nom_map: dict[str, int] = field(default_factory=dict)
    conom_map: dict[str, int] = field(default_factory=dict)

    def describe(self, dle: "FiniteDLE") -> str:
        parts = []
        for name, idx in sorted(self.var_map.items()):
            parts.append(f"{name}={dle.element_points(idx)}")
        for name, idx in sorted(self.nom_map.items()):
            parts.append(f"#{name}={dle.element_points(idx)}")
        for name, idx in sorted(self.conom_map.items()):
            parts.append(f"@{name}={dle.element_points(idx)}")
        return " ".join(parts)


class FiniteDLE:
    """Lattice of upsets of a poset plus operation tables.

    Tables are nested lists indexed by element index (arity 0 is a bare
    index).  Normality is validated at construction per the declared
    order types; relational generators are accepted for unary
    connectives, diamonds for the F-family, boxes for the G-family.
    """

    def __init__(self, poset: Poset, sig: Signature, ops: dict | None = None,
                 validate: bool = True):
        self.poset = poset
        self.sig = sig
        self.elements: tuple[int, ...] = tuple(sorted(
            m for m in range(1 << poset.n) if poset.is_upset(m)))
        self.index = {m: i for i, m in enumerate(self.elements)}
        self.n_elem = len(self.elements)
        self.bot = self.index[0]
        self.top = self.index[(1 << poset.n) - 1]
        self.join_table = [[self.index[a | b] for b in self.elements]
                           for a in self.elements]
        self.meet_table = [[self.index[a & b] for b in self.elements]
                           for a in self.elements]
        self.leq_table = [[(a & ~b) == 0 for b in self.elements]
                          for a in self.elements]
        self.jirr = tuple(self.index[poset.up[x]] for x in range(poset.n))
        self.mirr = tuple(self.index[((1 << poset.n) - 1) & ~poset.down(x)]
                          for x in range(poset.n))
        # denseness at finite scale: every element is the join of the
        # irreducibles below it and the meet of those above it
        for u in range(self.n_elem):
            assert self.join_all(j for j in self.jirr if self.leq_table[j][u]) == u
            assert self.meet_all(m for m in self.mirr if self.leq_table[u][m]) == u
        self.ops: dict[str, object] = {}
        self._cache: dict = {}
        for name, spec in sorted((ops or {}).items()):
            self.add_op(name, spec, validate=validate)

    # -- structure -------------------------------------------------------

    def leq(self, a: int, b: int) -> bool:
        return self.leq_table[a][b]

    def join(self, a: int, b: int) -> int:
        return self.join_table[a][b]

    def meet(self, a: int, b: int) -> int:
        return self.meet_table[a][b]

    def join_all(self, items) -> int:
        out = self.bot
        for x in items:
            out = self.join_table[out][x]
        return out

    def meet_all(self, items) -> int:
        out = self.top
        for x in items:
            out = self.meet_table[out][x]
        return out

    def element_points(self, idx: int) -> str:
        mask = self.elements[idx]
        return "{" + ",".join(str(i) for i in range(self.poset.n)
                              if mask & (1 << i)) + "}"

    # -- operations -------------------------------------------------------

    def _decl_for(self, name: str):
        decl = self.sig.decl(name)
        if decl is not None:
            return decl
        if name in ("dia", "lhd"):
            from .language import ConnectiveDecl, OrderType
            return ConnectiveDecl(name, "F", 1, OrderType(("1",) if name == "dia" else ("d",)))
        if name in ("box", "rhd"):
            from .language import ConnectiveDecl, OrderType
            return ConnectiveDecl(name, "G", 1, OrderType(("1",) if name == "box" else ("d",)))
        raise ModelError(f"operation {name!r} is not in the signature")

    def add_op(self, name: str, spec, validate: bool = True) -> None:
        decl = self._decl_for(name)
        if isinstance(spec, Relation):
            if decl.arity != 1 or decl.order_type[0] != "1":
                raise ModelError(
                    f"relational generator only fits unary (1) connectives, not {name}")
            if decl.family == "F":
                table = [self.index[diamond_of(self.poset, spec, self.elements[a])]
                         for a in range(self.n_elem)]
            else:
                table = [self.index[box_of(self.poset, spec, self.elements[a])]
                         for a in range(self.n_elem)]
        else:
            table = spec
        self.ops[name] = table
        if validate:
            try:
                self._validate_normality(decl, table)
            except ModelError:
                del self.ops[name]
                raise
        self._cache.clear()

    def op_value(self, name: str, args: tuple[int, ...]) -> int:
        table = self.ops[name]
        for a in args:
            table = table[a]
        return table

    def _validate_normality(self, decl, table) -> None:
        arity = decl.arity
        if arity == 0:
            if not isinstance(table, int):
                raise ModelError(f"nullary {decl.name} needs a bare element index")
            return
        idx_ranges = [range(self.n_elem)] * (arity - 1)
        for coord in range(arity):
            eps = decl.order_type[coord]
            for rest in product(*idx_ranges):
                def val(x: int) -> int:
                    args = list(rest[:coord]) + [x] + list(rest[coord:])
                    return self.op_value(decl.name, tuple(args))

                if decl.family == "F":
                    unit = self.bot if eps == "1" else self.top
                    if val(unit) != self.bot:
                        raise NormalityError(
                            f"{decl.name} coordinate {coord + 1}: unit not "
                            f"sent to bottom (args {rest})")
                else:
                    unit = self.top if eps == "1" else self.bot
                    if val(unit) != self.top:
                        raise NormalityError(
                            f"{decl.name} coordinate {coord + 1}: unit not "
                            f"sent to top (args {rest})")
                if decl.family == "F":
                    inner_is_join = eps == "1"
                else:
                    inner_is_join = eps == "d"
                for a in range(self.n_elem):
                    for b in range(a + 1, self.n_elem):
                        inner = self.join(a, b) if inner_is_join else self.meet(a, b)
                        lhs = val(inner)
                        if decl.family == "F":
                            rhs = self.join(val(a), val(b))
                        else:
                            rhs = self.meet(val(a), val(b))
                        if lhs != rhs:
                            raise NormalityError(
                                f"{decl.name} coordinate {coord + 1} fails "
                                f"normality at elements "
                                f"{self.element_points(a)},{self.element_points(b)}"
                                f" (args {rest})")

    # -- derived tables (cached) ------------------------------------------

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def role_table(self, role: str) -> list[int]:
        reg = self.sig.role(role)
        if reg is None:
            raise ModelError(f"role {role!r} has no registered term")

        def build():
            out = []
            for u in range(self.n_elem):
                val = Valuation(var_map={reg.var: u})
                out.append(eval_term(reg.term, self, val))
            return out

        return self._cached(("role", role), build)

    def def_table(self, role: str) -> list[int]:
        def build():
            f = self.role_table(role)
            out = []
            for u in range(self.n_elem):
                if role == "pi":
                    out.append(self.join_all(
                        f[j] for j in self.jirr if self.leq(j, u)))
                elif role == "sigma":
                    out.append(self.meet_all(
                        f[m] for m in self.mirr if self.leq(u, m)))
                elif role == "lambda":
                    out.append(self.join_all(
                        f[m] for m in self.mirr if self.leq(u, m)))
                else:  # rho
                    out.append(self.meet_all(
                        f[j] for j in self.jirr if self.leq(j, u)))
            return out

        return self._cached(("def", role), build)

    def black_table(self, role: str) -> list[int]:
        def build():
            g = self.def_table(role)
            out = []
            for u in range(self.n_elem):
                if role == "pi":
                    out.append(self.join_all(
                        w for w in range(self.n_elem) if self.leq(g[w], u)))
                elif role == "sigma":
                    out.append(self.meet_all(
                        w for w in range(self.n_elem) if self.leq(u, g[w])))
                elif role == "lambda":
                    out.append(self.meet_all(
                        w for w in range(self.n_elem) if self.leq(g[w], u)))
                else:  # rho
                    out.append(self.join_all(
                        w for w in range(self.n_elem) if self.leq(u, g[w])))
            return out

        return self._cached(("black", role), build)

    def dot_adj_table(self, kind: str) -> list[int]:
        base = {"dia_adj": "dia", "box_adj": "box",
                "lhd_adj": "lhd", "rhd_adj": "rhd"}[kind]
        if base not in self.ops:
            raise ModelError(f"dotted connective {base!r} has no table")

        def build():
            t = self.ops[base]
            out = []
            for u in range(self.n_elem):
                if kind == "dia_adj":   # right adjoint of dotted diamond
                    out.append(self.join_all(
                        w for w in range(self.n_elem) if self.leq(t[w], u)))
                elif kind == "box_adj":  # left adjoint of dotted box
                    out.append(self.meet_all(
                        w for w in range(self.n_elem) if self.leq(u, t[w])))
                elif kind == "lhd_adj":
                    out.append(self.meet_all(
                        w for w in range(self.n_elem) if self.leq(t[w], u)))
                else:
                    out.append(self.join_all(
                        w for w in range(self.n_elem) if self.leq(u, t[w])))
            return out

        return self._cached(("dotadj", kind), build)

    def residual_table(self, decl, coord: int):
        def build():
            if decl.arity > 3:
                raise ModelError("residual tables support arity <= 3")
            eps = decl.order_type[coord - 1]
            shape = [self.n_elem] * decl.arity

            def residual_value(args: tuple[int, ...]) -> int:
                chi = args[coord - 1]
                candidates = []
                for w in range(self.n_elem):
                    inner = list(args)
                    inner[coord - 1] = w
                    v = self.op_value(decl.name, tuple(inner))
                    if decl.family == "F":
                        ok = self.leq(v, chi)
                    else:
                        ok = self.leq(chi, v)
                    if ok:
                        candidates.append(w)
                if decl.family == "F":
                    return self.join_all(candidates) if eps == "1" else \
                        self.meet_all(candidates)
                return self.meet_all(candidates) if eps == "1" else \
                    self.join_all(candidates)

            def nest(prefix: tuple[int, ...], depth: int):
                if depth == decl.arity:
                    return residual_value(prefix)
                return [nest(prefix + (x,), depth + 1) for x in range(shape[depth])]

            return nest((), 0)

        return self._cached(("res", decl.name, coord), build)

    def arrow_table(self):
        def build():
            return [[self.join_all(
                w for w in range(self.n_elem)
                if self.leq(self.meet(a, w), b))
                for b in range(self.n_elem)] for a in range(self.n_elem)]

        return self._cached(("arrow",), build)

    def coimp_table(self):
        def build():
            return [[self.meet_all(
                w for w in range(self.n_elem)
                if self.leq(a, self.join(b, w)))
                for b in range(self.n_elem)] for a in range(self.n_elem)]

        return self._cached(("coimp",), build)


def build_dle(poset: Poset, sig: Signature, ops: dict) -> FiniteDLE:
    """Construct and validate a lattice; ``ops`` maps connective names to
    tables or Relation generators."""
    return FiniteDLE(poset, sig, ops, validate=True)


# ----------------------------------------------------------------------
# term compilation and evaluation

def _compile(t: Term, dle: FiniteDLE, pos: dict[tuple[str, str], int]):
    if isinstance(t, Var):
        i = pos[("var", t.name)]
        return lambda env: env[i]
    if isinstance(t, Nominal):
        i = pos[("nom", t.name)]
        return lambda env: env[i]
    if isinstance(t, Conominal):
        i = pos[("conom", t.name)]
        return lambda env: env[i]
    if isinstance(t, Top):
        c = dle.top
        return lambda env: c
    if isinstance(t, Bot):
        c = dle.bot
        return lambda env: c
    if isinstance(t, Meet):
        f, g = (_compile(a, dle, pos) for a in t.args)
        table = dle.meet_table
        return lambda env: table[f(env)][g(env)]
    if isinstance(t, Join):
        f, g = (_compile(a, dle, pos) for a in t.args)
        table = dle.join_table
        return lambda env: table[f(env)][g(env)]
    if isinstance(t, Arrow):
        f, g = (_compile(a, dle, pos) for a in t.args)
        table = dle.arrow_table()
        return lambda env: table[f(env)][g(env)]
    if isinstance(t, Coimp):
        f, g = (_compile(a, dle, pos) for a in t.args)
        table = dle.coimp_table()
        return lambda env: table[f(env)][g(env)]
    if isinstance(t, App):
        if t.decl.name not in dle.ops:
            raise ModelError(f"no table for connective {t.decl.name!r}")
        table = dle.ops[t.decl.name]
        if t.decl.arity == 0:
            c = table
            return lambda env: c
        subs = [_compile(a, dle, pos) for a in t.args]
        if t.decl.arity == 1:
            f = subs[0]
            return lambda env: table[f(env)]
        if t.decl.arity == 2:
            f, g = subs
            return lambda env: table[f(env)][g(env)]

        def apply_n(env, table=table, subs=subs):
            cur = table
            for s in subs:
                cur = cur[s(env)]
            return cur

        return apply_n
    if isinstance(t, Residual):
        table = dle.residual_table(t.decl, t.coord)
        subs = [_compile(a, dle, pos) for a in t.args]
        if t.decl.arity == 1:
            f = subs[0]
            return lambda env: table[f(env)]
        if t.decl.arity == 2:
            f, g = subs
            return lambda env: table[f(env)][g(env)]

        def apply_res(env, table=table, subs=subs):
            cur = table
            for s in subs:
                cur = cur[s(env)]
            return cur

        return apply_res
    unary = {
        DotDia: lambda: dle.ops.get("dia"), DotBox: lambda: dle.ops.get("box"),
        DotLhd: lambda: dle.ops.get("lhd"), DotRhd: lambda: dle.ops.get("rhd"),
        DotDiaAdj: lambda: dle.dot_adj_table("dia_adj"),
        DotBoxAdj: lambda: dle.dot_adj_table("box_adj"),
        DotLhdAdj: lambda: dle.dot_adj_table("lhd_adj"),
        DotRhdAdj: lambda: dle.dot_adj_table("rhd_adj"),
        DefDia: lambda: dle.def_table("pi"), DefBox: lambda: dle.def_table("sigma"),
        DefLhd: lambda: dle.def_table("lambda"), DefRhd: lambda: dle.def_table("rho"),
        BlackBox: lambda: dle.black_table("pi"),
        BlackDia: lambda: dle.black_table("sigma"),
        BlackLhd: lambda: dle.black_table("lambda"),
        BlackRhd: lambda: dle.black_table("rho"),
    }
    cls = type(t)
    if cls in unary:
        table = unary[cls]()
        if table is None:
            raise ModelError(
                f"dotted connective has no table on this lattice ({cls.__name__})")
        f = _compile(t.args[0], dle, pos)
        return lambda env: table[f(env)]
    raise ModelError(f"cannot evaluate {type(t).__name__}")


def _symbols_of_terms(terms) -> list[tuple[str, str]]:
    vs: set[str] = set()
    ns: set[str] = set()
    cs: set[str] = set()
    for t in terms:
        vs |= free_vars(t)
        ns |= nominals_of(t)
        cs |= conominals_of(t)
    return ([("var", v) for v in sorted(vs)] + [("nom", v) for v in sorted(ns)]
            + [("conom", v) for v in sorted(cs)])


def eval_term(t: Term, dle: FiniteDLE, val: Valuation,
              budget: Budget | None = None) -> int:
    """Evaluate one term under one valuation."""
    if budget is not None:
        budget.spend()
    symbols = _symbols_of_terms([t])
    pos = {sym: i for i, sym in enumerate(symbols)}
    env = []
    for kind, name in symbols:
        source = {"var": val.var_map, "nom": val.nom_map, "conom": val.conom_map}[kind]
        if name not in source:
            raise ModelError(f"unbound {kind} {name!r}")
        env.append(source[name])
    return _compile(t, dle, pos)(tuple(env))


def _domain(dle: FiniteDLE, kind: str) -> tuple[int, ...]:
    if kind == "var":
        return tuple(range(dle.n_elem))
    if kind == "nom":
        return dle.jirr
    return dle.mirr


def _valuation_from(symbols, env) -> Valuation:
    val = Valuation()
    for (kind, name), x in zip(symbols, env):
        {"var": val.var_map, "nom": val.nom_map,
         "conom": val.conom_map}[kind][name] = x
    return val


def check_validity(ineq: Inequality, dle: FiniteDLE,
                   budget: Budget | None = None
                   ) -> tuple[bool, Valuation | None]:
    """Quantify everything universally; on failure return the first
    counterexample valuation."""
    budget = budget or Budget()
    symbols = _symbols_of_terms([ineq.lhs, ineq.rhs])
    pos = {sym: i for i, sym in enumerate(symbols)}
    lhs = _compile(ineq.lhs, dle, pos)
    rhs = _compile(ineq.rhs, dle, pos)
    leq = dle.leq_table
    domains = [_domain(dle, kind) for kind, _ in symbols]
    for env in product(*domains):
        budget.spend()
        if not leq[lhs(env)][rhs(env)]:
            return False, _valuation_from(symbols, env)
    return True, None


def _system_symbols(system: System) -> list[tuple[str, str]]:
    terms = [t for si in system.ineqs for t in (si.ineq.lhs, si.ineq.rhs)]
    if system.goal is not None:
        terms += [system.goal.lhs, system.goal.rhs]
    return _symbols_of_terms(terms)


def _quasi_holds(system: System, dle: FiniteDLE, budget: Budget) -> bool:
    """Universal closure of (all antecedents) => goal."""
    symbols = _system_symbols(system)
    pos = {sym: i for i, sym in enumerate(symbols)}
    ants = [(_compile(si.ineq.lhs, dle, pos), _compile(si.ineq.rhs, dle, pos))
            for si in system.ineqs]
    leq = dle.leq_table
    if system.goal is None:
        raise ModelError("system has no goal")
    gl = _compile(system.goal.lhs, dle, pos)
    gr = _compile(system.goal.rhs, dle, pos)
    domains = [_domain(dle, kind) for kind, _ in symbols]
    for env in product(*domains):
        budget.spend()
        if all(leq[l(env)][r(env)] for l, r in ants):
            if not leq[gl(env)][gr(env)]:
                return False
    return True


def check_quasi(systems, dle: FiniteDLE, budget: Budget | None = None) -> bool:
    """Validity of a set of pure quasi-inequalities (success output)."""
    budget = budget or Budget()
    for system in systems:
        for si in system.ineqs:
            if free_vars(si.ineq.lhs) | free_vars(si.ineq.rhs):
                raise ModelError(
                    f"quasi-inequality is not pure: {print_inequality(si.ineq)}")
        if not _quasi_holds(system, dle, budget):
            return False
    return True


def verify_rule_step(parent: System, children, dle: FiniteDLE,
                     admissible_only: bool = False,
                     budget: Budget | None = None) -> bool:
    """Semantic soundness of one rule application: the parent system's
    quasi-inequality holds iff all children's do (fresh symbols of a
    child are quantified on the child side).  ``admissible_only`` is
    accepted for symmetry with restricted-assignment validity; on finite
    lattices every element is admissible, so it has no effect."""
    del admissible_only  # finite lattices are their own canonical extensions
    budget = budget or Budget()
    before = _quasi_holds(parent, dle, budget)
    after = all(_quasi_holds(child, dle, budget) for child in children)
    return before == after


def role_axioms_hold(dle: FiniteDLE) -> bool:
    """The registered terms satisfy their additivity-style axioms."""
    for reg in dle.sig.registered:
        f = dle.role_table(reg.role)
        n = dle.n_elem
        if reg.role == "pi":
            ok = all(dle.leq(f[dle.join(a, b)], dle.join(f[a], f[b]))
                     for a in range(n) for b in range(n))
        elif reg.role == "sigma":
            ok = all(dle.leq(dle.meet(f[a], f[b]), f[dle.meet(a, b)])
                     for a in range(n) for b in range(n))
        elif reg.role == "lambda":
            ok = all(dle.leq(f[dle.meet(a, b)], dle.join(f[a], f[b]))
                     for a in range(n) for b in range(n))
        else:  # rho
            ok = all(dle.leq(dle.meet(f[a], f[b]), f[dle.join(a, b)])
                     for a in range(n) for b in range(n))
        if not ok:
            return False
    return True


@dataclass
class CorrespondenceReport:
    lattices: int = 0
    skipped: int = 0
    divergences: list = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return not self.divergences


def verify_correspondence(ineq: Inequality, derivation, dles,
                          budget: Budget | None = None) -> CorrespondenceReport:
    """Check input validity against the reduced output on each lattice.

    Lattices that do not satisfy the registered role axioms are skipped
    for enhanced-mode derivations (the role rules are only sound there).
    """
    if derivation.status.kind != "success":
        raise ModelError("verify_correspondence needs a successful derivation")
    systems = derivation.status.pure_systems
    report = CorrespondenceReport()
    for dle in dles:
        if derivation.mode == "albae" and not role_axioms_hold(dle):
            report.skipped += 1
            continue
        report.lattices += 1
        b = budget or Budget()
        left, _ = check_validity(ineq, dle, b)
        right = check_quasi(systems, dle, b)
        if left != right:
            report.divergences.append((dle, left, right))
    return report


@dataclass
class LemmaSuiteReport:
    role_results: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(all(v for v in res.values()) for res in self.role_results.values())


def check_lemma_suite(dle: FiniteDLE, rng=None) -> LemmaSuiteReport:
    """Exhaustive check of the defined-modality identities on one lattice:
    adjunctions, join/meet preservation, the irreducible-witness form,
    the bounded-composition identity against the additivity axiom, and
    the pseudo-correspondent biconditional for pi."""
    report = LemmaSuiteReport()
    n = dle.n_elem
    rng_subsets: list[list[int]] = []
    if rng is not None:
        rng_subsets = [[x for x in range(n) if rng.random() < 0.5]
                       for _ in range(50)]
    for reg in dle.sig.registered:
        role = reg.role
        f = dle.role_table(role)
        g = dle.def_table(role)
        adj = dle.black_table(role)
        res: dict[str, bool] = {}
        if role == "pi":
            res["adjunction"] = all(
                dle.leq(g[u], w) == dle.leq(u, adj[w])
                for u in range(n) for w in range(n))
            res["join_preserving"] = g[dle.bot] == dle.bot and all(
                g[dle.join(a, b)] == dle.join(g[a], g[b])
                for a in range(n) for b in range(n))
            if rng_subsets:
                res["join_preserving_subsets"] = all(
                    g[dle.join_all(s)] == dle.join_all(g[x] for x in s)
                    for s in rng_subsets)
            res["below_f"] = all(dle.leq(g[u], f[u]) for u in range(n))
            res["agrees_on_jirr"] = all(g[j] == f[j] for j in dle.jirr)
            res["irreducible_form"] = all(
                g[u] == dle.join_all(
                    j2 for j2 in dle.jirr
                    if any(dle.leq(i, u) and dle.leq(j2, f[i]) for i in dle.jirr))
                for u in range(n))
            additive = all(dle.leq(f[dle.join(a, b)], dle.join(f[a], f[b]))
                           for a in range(n) for b in range(n))
            identity = all(f[u] == dle.join(f[dle.bot], g[u]) for u in range(n))
            c_pi = all(
                (not dle.leq(f[dle.bot], m)) or dle.leq(f[adj[m]], m)
                for m in dle.mirr)
            res["identity_iff_additive"] = identity == additive
            res["c_pi_iff_additive"] = c_pi == additive
            report.notes.append(
                f"pi: additive={additive} identity={identity} c_pi={c_pi}")
        elif role == "sigma":
            res["adjunction"] = all(
                dle.leq(adj[u], w) == dle.leq(u, g[w])
                for u in range(n) for w in range(n))
            res["meet_preserving"] = g[dle.top] == dle.top and all(
                g[dle.meet(a, b)] == dle.meet(g[a], g[b])
                for a in range(n) for b in range(n))
            res["above_f"] = all(dle.leq(f[u], g[u]) for u in range(n))
            res["agrees_on_mirr"] = all(g[m] == f[m] for m in dle.mirr)
            multiplicative = all(
                dle.leq(dle.meet(f[a], f[b]), f[dle.meet(a, b)])
                for a in range(n) for b in range(n))
            identity = all(f[u] == dle.meet(f[dle.top], g[u]) for u in range(n))
            res["identity_iff_multiplicative"] = identity == multiplicative
            report.notes.append(
                f"sigma: multiplicative={multiplicative} identity={identity}")
        elif role == "lambda":
            res["galois"] = all(
                dle.leq(g[u], w) == dle.leq(adj[w], u)
                for u in range(n) for w in range(n))
            res["below_f"] = all(dle.leq(g[u], f[u]) for u in range(n))
            res["agrees_on_mirr"] = all(g[m] == f[m] for m in dle.mirr)
            axiom = all(dle.leq(f[dle.meet(a, b)], dle.join(f[a], f[b]))
                        for a in range(n) for b in range(n))
            identity = all(f[u] == dle.join(f[dle.top], g[u]) for u in range(n))
            res["identity_iff_axiom"] = identity == axiom
        else:  # rho
            res["galois"] = all(
                dle.leq(u, g[w]) == dle.leq(w, adj[u])
                for u in range(n) for w in range(n))
            res["above_f"] = all(dle.leq(f[u], g[u]) for u in range(n))
            res["agrees_on_jirr"] = all(g[j] == f[j] for j in dle.jirr)
            axiom = all(dle.leq(dle.meet(f[a], f[b]), f[dle.join(a, b)])
                        for a in range(n) for b in range(n))
            identity = all(f[u] == dle.meet(f[dle.bot], g[u]) for u in range(n))
            res["identity_iff_axiom"] = identity == axiom
        report.role_results[role] = res
    return report


# ----------------------------------------------------------------------
# lattice/ops import format

def load_dle(text: str, sig: Signature) -> FiniteDLE:
    """Text format: ``points N``; ``leq a<=b ...`` pairs (closure taken);
    ``rel name : (a,b) (c,d)`` relational generators; ``table name : i i
    ...`` row-major element indices."""
    npoints = None
    pairs: list[tuple[int, int]] = []
    op_lines: list[tuple[str, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "points":
            npoints = int(rest.strip())
        elif head == "leq":
            for chunk in rest.split():
                a, _, b = chunk.partition("<=")
                pairs.append((int(a), int(b)))
        elif head in ("rel", "table"):
            name, _, body = rest.partition(":")
            op_lines.append((head, name.strip(), body.strip()))
        else:
            raise ModelError(f"line {lineno}: cannot parse {line!r}")
    if npoints is None:
        raise ModelError("missing 'points' line")
    up = [1 << i for i in range(npoints)]
    for a, b in pairs:
        up[a] |= 1 << b
    changed = True
    while changed:
        changed = False
        for i in range(npoints):
            for j in range(npoints):
                if up[i] & (1 << j) and up[j] & ~up[i]:
                    up[i] |= up[j]
                    changed = True
    poset = Poset(npoints, tuple(up))
    dle = FiniteDLE(poset, sig)
    for kind, name, body in op_lines:
        if kind == "rel":
            rel_pairs = []
            for chunk in body.replace("(", " ").replace(")", " ").split():
                a, _, b = chunk.partition(",")
                rel_pairs.append((int(a), int(b)))
            dle.add_op(name, Relation.from_pairs(npoints, rel_pairs))
        else:
            values = [int(v) for v in body.split()]
            decl = dle._decl_for(name)
            need = dle.n_elem ** decl.arity if decl.arity else 1
            if len(values) != need:
                raise ModelError(
                    f"table {name}: expected {need} entries, got {len(values)}")
            dle.add_op(name, _nest_table(values, dle.n_elem, decl.arity))
    return dle


def _nest_table(values: list[int], n: int, arity: int):
    if arity == 0:
        return values[0]
    if arity == 1:
        return list(values)

    def nest(offset: int, depth: int):
        if depth == arity:
            return values[offset]
        stride = n ** (arity - depth - 1)
        return [nest(offset + i * stride, depth + 1) for i in range(n)]

    return nest(0, 0)


# ----------------------------------------------------------------------
# sweeps and random operations

def poset_automorphisms(poset: Poset) -> list[tuple[int, ...]]:
    out = []
    for perm in permutations(range(poset.n)):
        if all(poset.leq(i, j) == poset.leq(perm[i], perm[j])
               for i in range(poset.n) for j in range(poset.n)):
            out.append(perm)
    return out


def canonical_relations(poset: Poset) -> list[Relation]:
    """All relations on the poset's points, one per orbit under the
    poset's automorphism group, in ascending encoding order."""
    n = poset.n
    perms = poset_automorphisms(poset)
    out = []
    for code in range(1 << (n * n)):
        rows = tuple((code >> (n * i)) & ((1 << n) - 1) for i in range(n))
        canon = code
        for perm in perms:
            permuted = [0] * n
            for x in range(n):
                row = 0
                for y in range(n):
                    if rows[x] & (1 << y):
                        row |= 1 << perm[y]
                permuted[perm[x]] = row
            pcode = sum(r << (n * i) for i, r in enumerate(permuted))
            canon = min(canon, pcode)
        if canon == code:
            out.append(Relation(rows))
    return out


def relational_lattices(sig: Signature, poset: Poset,
                        names: tuple[str, ...] = ("dia", "box")):
    """All complex-algebra style lattices over one poset: each canonical
    relation interprets every listed unary connective (diamonds for the
    F-family, boxes for the G-family, same relation throughout)."""
    for rel in canonical_relations(poset):
        dle = FiniteDLE(poset, sig)
        for name in names:
            dle.add_op(name, rel, validate=False)
        yield rel, dle


def random_poset(rng, max_points: int = 4) -> Poset:
    n = rng.randint(1, max_points)
    posets = enumerate_posets(n)
    return posets[rng.randrange(len(posets))]


def random_normal_table(rng, dle: FiniteDLE, decl):
    """Random normal operation from values on irreducible tuples."""
    n = dle.n_elem
    if decl.arity == 0:
        return rng.randrange(n)
    if decl.family == "F":
        gens = [dle.jirr if e == "1" else dle.mirr for e in decl.order_type.entries]
    else:
        gens = [dle.mirr if e == "1" else dle.jirr for e in decl.order_type.entries]
    assignment = {combo: rng.randrange(n) for combo in product(*gens)}

    def value(args: tuple[int, ...]) -> int:
        picked = []
        for combo, v in assignment.items():
            ok = True
            for x, u, e in zip(combo, args, decl.order_type.entries):
                if decl.family == "F":
                    ok = dle.leq(x, u) if e == "1" else dle.leq(u, x)
                else:
                    ok = dle.leq(u, x) if e == "1" else dle.leq(x, u)
                if not ok:
                    break
            if ok:
                picked.append(v)
        return dle.join_all(picked) if decl.family == "F" else dle.meet_all(picked)

    def nest(prefix: tuple[int, ...], depth: int):
        if depth == decl.arity:
            return value(prefix)
        return [nest(prefix + (i,), depth + 1) for i in range(n)]

    return nest((), 0)


def random_dle(rng, sig: Signature, max_points: int = 4,
               validate: bool = False) -> FiniteDLE:
    poset = random_poset(rng, max_points)
    dle = FiniteDLE(poset, sig)
    for decl in sig.connectives:
        dle.add_op(decl.name, random_normal_table(rng, dle, decl),
                   validate=validate)
    return dle
