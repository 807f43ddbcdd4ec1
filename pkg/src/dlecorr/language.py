"""Order-typed modal languages over bounded distributive lattices.

A signature fixes two families of normal connectives: F-family symbols
preserve joins (coordinatewise, per order type) and G-family symbols
preserve meets.  On top of a signature the term language comes in four
nested layers:

  DLE      variables, lattice constants/connectives, declared symbols
  DLEstar  adds the four dotted placeholder modalities (unary, fixed types)
  DLEplus  adds nominals, conominals, residuals of all declared symbols,
           residuals of the lattice connectives, and the adjoints of the
           dotted modalities
  DLEpp    adds the defined modalities Dia/Box/Lhd/Rhd parameterized by a
           registered unary term (role pi/sigma/lambda/rho) together with
           their adjoints bsq/bdia/blhd/brhd

Everything here is immutable; terms hash and compare structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Mapping


MONO = 1
ANTI = -1


class Layer(IntEnum):
    DLE = 0
    DLESTAR = 1
    DLEPLUS = 2
    DLEPP = 3

    @classmethod
    def parse(cls, name: str) -> "Layer":
        key = name.strip().lower().replace("^", "").replace("+", "plus")
        table = {
            "dle": cls.DLE,
            "dlestar": cls.DLESTAR,
            "dle*": cls.DLESTAR,
            "dleplus": cls.DLEPLUS,
            "dleplusplus": cls.DLEPP,
            "dlepp": cls.DLEPP,
        }
        if key not in table:
            raise ValueError(f"unknown layer {name!r}")
        return table[key]


@dataclass(frozen=True)
class OrderType:
    """Per-coordinate monotonicity flags: '1' monotone, 'd' antitone."""

    entries: tuple[str, ...]

    def __post_init__(self) -> None:
        for e in self.entries:
            if e not in ("1", "d"):
                raise ValueError(f"order-type entry must be '1' or 'd', got {e!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> str:
        return self.entries[i]

    def opposite(self) -> "OrderType":
        return OrderType(tuple("d" if e == "1" else "1" for e in self.entries))

    def tonicities(self) -> tuple[int, ...]:
        return tuple(MONO if e == "1" else ANTI for e in self.entries)

    def __str__(self) -> str:
        return "(" + ",".join(self.entries) + ")"


# Names that can never be declared as connectives.
HARD_RESERVED = {
    "top", "bot", "res", "conn", "term",
    "Dia", "Box", "Lhd", "Rhd", "bsq", "bdia", "blhd", "brhd",
}

# Spellings of the dotted DLEstar modalities.  A signature may declare
# ordinary connectives with these names; the declaration then shadows the
# dotted reading in concrete syntax.
DOTTED_NAMES = ("dia", "box", "lhd", "rhd")

ROLES = ("pi", "sigma", "lambda", "rho")


@dataclass(frozen=True)
class ConnectiveDecl:
    name: str
    family: str  # "F" | "G"
    arity: int
    order_type: OrderType

    def __post_init__(self) -> None:
        if self.family not in ("F", "G"):
            raise ValueError(f"family must be F or G, got {self.family!r}")
        if self.arity < 0:
            raise ValueError("arity must be nonnegative")
        if len(self.order_type) != self.arity:
            raise ValueError(
                f"connective {self.name}: arity {self.arity} does not match "
                f"order type {self.order_type}"
            )

    def tonicities(self) -> tuple[int, ...]:
        return self.order_type.tonicities()


class Term:
    """Base class; every node stores its subterms in ``args``."""

    args: tuple["Term", ...] = ()

    def tonicities(self) -> tuple[int, ...]:
        raise NotImplementedError

    def with_args(self, args: tuple["Term", ...]) -> "Term":
        raise NotImplementedError

    def min_layer(self) -> Layer:
        return Layer.DLE


@dataclass(frozen=True)
class Var(Term):
    name: str

    def tonicities(self) -> tuple[int, ...]:
        return ()

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return self


@dataclass(frozen=True)
class Nominal(Term):
    name: str

    def tonicities(self) -> tuple[int, ...]:
        return ()

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return self

    def min_layer(self) -> Layer:
        return Layer.DLEPLUS


@dataclass(frozen=True)
class Conominal(Term):
    name: str

    def tonicities(self) -> tuple[int, ...]:
        return ()

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return self

    def min_layer(self) -> Layer:
        return Layer.DLEPLUS


@dataclass(frozen=True)
class Top(Term):
    def tonicities(self) -> tuple[int, ...]:
        return ()

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return self


@dataclass(frozen=True)
class Bot(Term):
    def tonicities(self) -> tuple[int, ...]:
        return ()

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return self


TOP = Top()
BOT = Bot()


@dataclass(frozen=True)
class Meet(Term):
    args: tuple[Term, Term]

    def tonicities(self) -> tuple[int, ...]:
        return (MONO, MONO)

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return Meet(args)  # type: ignore[arg-type]


@dataclass(frozen=True)
class Join(Term):
    args: tuple[Term, Term]

    def tonicities(self) -> tuple[int, ...]:
        return (MONO, MONO)

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return Join(args)  # type: ignore[arg-type]


@dataclass(frozen=True)
class App(Term):
    decl: ConnectiveDecl
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if len(self.args) != self.decl.arity:
            raise ValueError(
                f"{self.decl.name} expects {self.decl.arity} arguments, "
                f"got {len(self.args)}"
            )

    def tonicities(self) -> tuple[int, ...]:
        return self.decl.tonicities()

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return App(self.decl, args)


@dataclass(frozen=True)
class Residual(Term):
    """Residual of ``decl`` in coordinate ``coord`` (1-based).

    The argument at position coord-1 holds the residuated side; the other
    arguments are passed through unchanged.  Tonicity follows the general
    adjunction pattern: the residuated coordinate keeps the original
    order-type entry, a passive coordinate flips exactly when the
    residuated entry is '1'.
    """

    decl: ConnectiveDecl
    coord: int
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not (1 <= self.coord <= self.decl.arity):
            raise ValueError(
                f"residual coordinate {self.coord} out of range for "
                f"{self.decl.name}/{self.decl.arity}"
            )
        if len(self.args) != self.decl.arity:
            raise ValueError("residual takes the same number of arguments")

    def tonicities(self) -> tuple[int, ...]:
        eps = self.decl.tonicities()
        h = self.coord - 1
        out = []
        for j, e in enumerate(eps):
            if j == h:
                out.append(eps[h])
            elif eps[h] == MONO:
                out.append(-e)
            else:
                out.append(e)
        return tuple(out)

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return Residual(self.decl, self.coord, args)

    def min_layer(self) -> Layer:
        return Layer.DLEPLUS


def _unary(cls_name: str, tonicity: int, layer: Layer, role: str | None = None):
    """Build a frozen unary Term subclass (dotted/defined/adjoint nodes)."""

    @dataclass(frozen=True)
    class _Node(Term):
        args: tuple[Term]

        def tonicities(self) -> tuple[int, ...]:
            return (tonicity,)

        def with_args(self, args: tuple[Term, ...]) -> Term:
            return _Node(args)  # type: ignore[arg-type]

        def min_layer(self) -> Layer:
            return layer

    _Node.__name__ = cls_name
    _Node.__qualname__ = cls_name
    _Node.role = role  # type: ignore[attr-defined]
    return _Node


# Dotted placeholder modalities (DLEstar).
DotDia = _unary("DotDia", MONO, Layer.DLESTAR)
DotBox = _unary("DotBox", MONO, Layer.DLESTAR)
DotLhd = _unary("DotLhd", ANTI, Layer.DLESTAR)
DotRhd = _unary("DotRhd", ANTI, Layer.DLESTAR)

# Their adjoints (DLEplus): right adjoint of DotDia, left adjoint of
# DotBox, and the two Galois adjoints.
DotDiaAdj = _unary("DotDiaAdj", MONO, Layer.DLEPLUS)
DotBoxAdj = _unary("DotBoxAdj", MONO, Layer.DLEPLUS)
DotLhdAdj = _unary("DotLhdAdj", ANTI, Layer.DLEPLUS)
DotRhdAdj = _unary("DotRhdAdj", ANTI, Layer.DLEPLUS)

# Defined modalities, one per role (DLEpp).
DefDia = _unary("DefDia", MONO, Layer.DLEPP, role="pi")
DefBox = _unary("DefBox", MONO, Layer.DLEPP, role="sigma")
DefLhd = _unary("DefLhd", ANTI, Layer.DLEPP, role="lambda")
DefRhd = _unary("DefRhd", ANTI, Layer.DLEPP, role="rho")

# Their adjoints (DLEpp).
BlackBox = _unary("BlackBox", MONO, Layer.DLEPP, role="pi")
BlackDia = _unary("BlackDia", MONO, Layer.DLEPP, role="sigma")
BlackLhd = _unary("BlackLhd", ANTI, Layer.DLEPP, role="lambda")
BlackRhd = _unary("BlackRhd", ANTI, Layer.DLEPP, role="rho")

DEF_BY_ROLE = {"pi": DefDia, "sigma": DefBox, "lambda": DefLhd, "rho": DefRhd}
BLACK_BY_ROLE = {"pi": BlackBox, "sigma": BlackDia, "lambda": BlackLhd, "rho": BlackRhd}
DOT_BY_ROLE = {"pi": DotDia, "sigma": DotBox, "lambda": DotLhd, "rho": DotRhd}
ROLE_BY_DOT = {DotDia: "pi", DotBox: "sigma", DotLhd: "lambda", DotRhd: "rho"}
DOTADJ_FOR_DOT = {DotDia: DotDiaAdj, DotBox: DotBoxAdj, DotLhd: DotLhdAdj, DotRhd: DotRhdAdj}


@dataclass(frozen=True)
class Arrow(Term):
    """Residual of meet; parsed and evaluated, produced by no rule."""

    args: tuple[Term, Term]

    def tonicities(self) -> tuple[int, ...]:
        return (ANTI, MONO)

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return Arrow(args)  # type: ignore[arg-type]

    def min_layer(self) -> Layer:
        return Layer.DLEPLUS


@dataclass(frozen=True)
class Coimp(Term):
    """Residual of join; parsed and evaluated, produced by no rule."""

    args: tuple[Term, Term]

    def tonicities(self) -> tuple[int, ...]:
        return (MONO, ANTI)

    def with_args(self, args: tuple[Term, ...]) -> Term:
        return Coimp(args)  # type: ignore[arg-type]

    def min_layer(self) -> Layer:
        return Layer.DLEPLUS


@dataclass(frozen=True)
class RegisteredTerm:
    role: str
    var: str
    term: Term

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class Signature:
    connectives: tuple[ConnectiveDecl, ...]
    registered: tuple[RegisteredTerm, ...] = ()
    _by_name: dict = field(default=None, compare=False, hash=False, repr=False)  # type: ignore[assignment]
    _by_role: dict = field(default=None, compare=False, hash=False, repr=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        by_name: dict[str, ConnectiveDecl] = {}
        for decl in self.connectives:
            if decl.name in HARD_RESERVED:
                raise ValueError(f"connective name {decl.name!r} is reserved")
            if decl.name in by_name:
                raise ValueError(f"duplicate connective {decl.name!r}")
            by_name[decl.name] = decl
        by_role: dict[str, RegisteredTerm] = {}
        for reg in self.registered:
            if reg.role in by_role:
                raise ValueError(f"duplicate registered term for role {reg.role!r}")
            by_role[reg.role] = reg
        object.__setattr__(self, "_by_name", by_name)
        object.__setattr__(self, "_by_role", by_role)

    def decl(self, name: str) -> ConnectiveDecl | None:
        return self._by_name.get(name)

    def role(self, role: str) -> RegisteredTerm | None:
        return self._by_role.get(role)

    def shadows(self, name: str) -> bool:
        return name in DOTTED_NAMES and name in self._by_name

    def role_instance(self, role: str, arg: Term) -> Term:
        """The registered term for ``role`` applied to ``arg``."""
        reg = self.role(role)
        if reg is None:
            raise KeyError(f"role {role!r} has no registered term")
        return substitute(reg.term, {reg.var: arg})


@dataclass(frozen=True)
class Inequality:
    lhs: Term
    rhs: Term

    def min_layer(self) -> Layer:
        return max(layer_of(self.lhs), layer_of(self.rhs))


def subterms(t: Term) -> Iterator[Term]:
    yield t
    for a in t.args:
        yield from subterms(a)


def layer_of(t: Term) -> Layer:
    return max(s.min_layer() for s in subterms(t))


def admits(t: Term, layer: Layer) -> bool:
    return layer_of(t) <= layer


def free_vars(t: Term) -> set[str]:
    return {s.name for s in subterms(t) if isinstance(s, Var)}


def nominals_of(t: Term) -> set[str]:
    return {s.name for s in subterms(t) if isinstance(s, Nominal)}


def conominals_of(t: Term) -> set[str]:
    return {s.name for s in subterms(t) if isinstance(s, Conominal)}


def substitute(t: Term, mapping: Mapping[str, Term]) -> Term:
    """Simultaneous replacement of variables; the language has no binders."""
    if not mapping:
        return t
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if not t.args:
        return t
    new_args = tuple(substitute(a, mapping) for a in t.args)
    if new_args == t.args:
        return t
    return t.with_args(new_args)


def replace_at(t: Term, path: tuple[int, ...], replacement: Term) -> Term:
    if not path:
        return replacement
    i = path[0]
    if i >= len(t.args):
        raise IndexError(f"path step {i} out of range in {type(t).__name__}")
    new_args = list(t.args)
    new_args[i] = replace_at(t.args[i], path[1:], replacement)
    return t.with_args(tuple(new_args))


def subterm_at(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = t.args[i]
    return t


def var_occurrences(t: Term, sign: int = MONO) -> Iterator[tuple[str, int, tuple[int, ...]]]:
    """All variable occurrences as (name, sign, path) under sign propagation."""
    if isinstance(t, Var):
        yield (t.name, sign, ())
        return
    for i, (a, tone) in enumerate(zip(t.args, t.tonicities())):
        for name, s, path in var_occurrences(a, sign * tone):
            yield (name, s, (i,) + path)


def meet(a: Term, b: Term) -> Term:
    return Meet((a, b))


def join(a: Term, b: Term) -> Term:
    return Join((a, b))


def big_join(terms: list[Term]) -> Term:
    """Left-nested join; empty list is bottom, singletons are unwrapped."""
    if not terms:
        return BOT
    out = terms[0]
    for t in terms[1:]:
        out = join(out, t)
    return out


def big_meet(terms: list[Term]) -> Term:
    if not terms:
        return TOP
    out = terms[0]
    for t in terms[1:]:
        out = meet(out, t)
    return out
