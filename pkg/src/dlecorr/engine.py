"""Variable-elimination engine for inequalities over perfect lattices.

A derivation starts from one inequality, preprocesses it into pieces,
turns each piece into a system { i0 <= lhs, rhs <= m0 } with goal
i0 <= m0, and then rewrites systems with residuation, adjunction,
approximation, splitting and the two Ackermann rules until no
propositional variable is left.  Success yields a set of pure systems,
read as universally quantified quasi-inequalities.

Two modes are supported.  Plain mode works on the base language plus the
dotted modalities as primitive connectives.  Role mode (the enhanced
calculus) treats an input that is a substitution image of a dotted
inequality: internally the derivation carries the dotted preimage, where
each dotted node marks an occurrence of the registered term for its role
(pi/sigma/lambda/rho).  Rules on those markers are the role rules, which
introduce side conditions (flagged, and never rewritten afterwards except
by Ackermann substitution), the defined modalities Dia/Box/Lhd/Rhd and
their adjoints bsq/bdia/blhd/brhd.  Traces and results always show the
concrete image, with markers expanded to the registered terms.

Failure is a value: a stuck report naming the offending variable and the
blocking inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import classify
from .language import (
    ANTI, BOT, DOTADJ_FOR_DOT, MONO, ROLE_BY_DOT, TOP, App, Arrow, BlackBox,
    BlackDia, BlackLhd, BlackRhd, Coimp, Conominal, DefBox, DefDia, DefLhd,
    DefRhd, DotBox, DotBoxAdj, DotDia, DotDiaAdj, DotLhd, DotLhdAdj, DotRhd,
    DotRhdAdj, Inequality, Join, Meet, Nominal, Residual, Signature, Term,
    Var, big_join, big_meet, conominals_of, free_vars, join, meet,
    nominals_of, replace_at, substitute, subterm_at, var_occurrences,
)
from .printing import print_inequality, print_term


class EngineError(ValueError):
    pass


class RuleMatchError(EngineError):
    pass


class FreshnessError(EngineError):
    pass


class AckermannShapeError(EngineError):
    pass


@dataclass(frozen=True)
class SysIneq:
    ineq: Inequality
    side: bool = False


@dataclass(frozen=True)
class System:
    ineqs: tuple[SysIneq, ...]
    goal: Inequality | None = None

    def __post_init__(self) -> None:
        if self.goal is not None:
            if not isinstance(self.goal.lhs, Nominal) or not isinstance(self.goal.rhs, Conominal):
                raise EngineError("goal must be nominal <= conominal")

    def inequalities(self) -> tuple[Inequality, ...]:
        return tuple(si.ineq for si in self.ineqs)

    def contains(self, ineq: Inequality) -> bool:
        return any(si.ineq == ineq for si in self.ineqs)

    def replace_index(self, idx: int, items: list[SysIneq]) -> "System":
        """Replace entry ``idx`` by ``items``; first occurrence wins on dupes."""
        merged: list[SysIneq] = []
        for i, si in enumerate(self.ineqs):
            if i == idx:
                merged.extend(items)
            else:
                merged.append(si)
        out: list[SysIneq] = []
        seen: set[Inequality] = set()
        for si in merged:
            if si.ineq not in seen:
                seen.add(si.ineq)
                out.append(si)
        return System(tuple(out), self.goal)

    def append(self, items: list[SysIneq]) -> "System":
        out = list(self.ineqs)
        for item in items:
            if not any(o.ineq == item.ineq for o in out):
                out.append(item)
        return System(tuple(out), self.goal)

    def symbols(self) -> set[str]:
        names: set[str] = set()
        terms = [t for si in self.ineqs for t in (si.ineq.lhs, si.ineq.rhs)]
        if self.goal is not None:
            terms += [self.goal.lhs, self.goal.rhs]
        for t in terms:
            names |= free_vars(t) | nominals_of(t) | conominals_of(t)
        return names


@dataclass(frozen=True)
class RuleApplication:
    rule_id: str
    ineq_index: int | None = None
    path: tuple[int, ...] = ()
    coord: int | None = None
    pivot: str | None = None
    branch: str | None = None  # set on child nodes of branching rules

    def label(self) -> str:
        head = self.rule_id
        if self.coord is not None:
            head += f"({self.coord})"
        if self.pivot is not None:
            head += f" @ {self.pivot}"
        elif self.ineq_index is not None:
            head += f" @ {self.ineq_index}"
            if self.path:
                head += "/" + ".".join(str(i) for i in self.path)
        if self.branch:
            head += f" [{self.branch}]"
        return head


@dataclass(frozen=True)
class StuckReport:
    variables: tuple[str, ...]
    blocking: tuple[Inequality, ...]
    message: str


@dataclass(frozen=True)
class RunStatus:
    kind: str  # "running" | "success" | "failure"
    pure_systems: tuple[System, ...] = ()
    stuck: StuckReport | None = None


@dataclass
class DerivNode:
    id: int
    parent: int | None
    rule: RuleApplication | None
    system: System
    principal: Inequality | None = None
    fresh: tuple[str, ...] = ()
    target_was_side: bool = False
    children: list[int] = field(default_factory=list)


ROLE_RULE_IDS = frozenset({
    "DistPi", "DistSigma", "DistLambda", "DistRho",
    "AdjPi", "AdjSigma", "AdjLambda", "AdjRho",
    "ApproxPi", "ApproxSigma", "ApproxLambda", "ApproxRho",
    "RewritePi", "RewriteSigma", "RewriteLambda", "RewriteRho",
})
ACKERMANN_RULE_IDS = frozenset({"AckermannRight", "AckermannLeft"})


class Derivation:
    def __init__(self, root: Inequality, sig: Signature, mode: str,
                 internal_root: Inequality | None = None):
        self.root = root
        self.sig = sig
        self.mode = mode  # "alba" | "albae"
        self.role_mode = mode == "albae"
        self.nodes: list[DerivNode] = [
            DerivNode(0, None, None, System((SysIneq(internal_root or root),), None))
        ]
        self.status = RunStatus("running")
        self._nom_counter = 0
        self._conom_counter = 0
        self.closed: set[int] = set()

    # -- bookkeeping ----------------------------------------------------

    def node(self, node_id: int) -> DerivNode:
        return self.nodes[node_id]

    def leaves(self) -> list[int]:
        return [n.id for n in self.nodes if not n.children]

    def open_leaves(self) -> list[int]:
        return [i for i in self.leaves() if i not in self.closed]

    def fresh_nominal(self, system: System) -> Nominal:
        while True:
            self._nom_counter += 1
            name = f"j{self._nom_counter}"
            if name not in system.symbols():
                return Nominal(name)

    def fresh_conominal(self, system: System) -> Conominal:
        while True:
            self._conom_counter += 1
            name = f"n{self._conom_counter}"
            if name not in system.symbols():
                return Conominal(name)

    def _add_child(self, parent: int, rule: RuleApplication, system: System,
                   principal: Inequality | None, fresh: tuple[str, ...],
                   target_was_side: bool) -> int:
        nid = len(self.nodes)
        node = DerivNode(nid, parent, rule, system, principal, fresh, target_was_side)
        self.nodes.append(node)
        self.nodes[parent].children.append(nid)
        return nid

    # -- concretization ---------------------------------------------------

    def concretize_term(self, t: Term) -> Term:
        if not self.role_mode:
            return t
        return concretize(t, self.sig)

    def concretize_system(self, system: System) -> System:
        if not self.role_mode:
            return system
        return System(
            tuple(SysIneq(Inequality(self.concretize_term(si.ineq.lhs),
                                     self.concretize_term(si.ineq.rhs)), si.side)
                  for si in system.ineqs),
            system.goal,
        )

    def node_system_concrete(self, node_id: int) -> System:
        return self.concretize_system(self.nodes[node_id].system)


def concretize(t: Term, sig: Signature) -> Term:
    """Expand dotted role markers to their registered terms."""
    cls = type(t)
    if cls in ROLE_BY_DOT:
        return sig.role_instance(ROLE_BY_DOT[cls], concretize(t.args[0], sig))
    if cls in DOTADJ_FOR_DOT.values():
        raise EngineError("dotted adjoint in a role-mode system")
    if not t.args:
        return t
    return t.with_args(tuple(concretize(a, sig) for a in t.args))


# ----------------------------------------------------------------------
# rule implementations
#
# Each helper takes the derivation, the target node's system and the
# application record, and returns a list of successor systems together
# with the principal inequality and the fresh names it introduced.


def _target(system: System, app: RuleApplication) -> tuple[int, SysIneq]:
    if app.ineq_index is None:
        raise RuleMatchError(f"{app.rule_id} needs an inequality index")
    if not (0 <= app.ineq_index < len(system.ineqs)):
        raise RuleMatchError(f"inequality index {app.ineq_index} out of range")
    return app.ineq_index, system.ineqs[app.ineq_index]


def _role_of_marker(t: Term) -> str | None:
    return ROLE_BY_DOT.get(type(t))


def _match_role_head(t: Term, role: str, sig: Signature, role_mode: bool) -> Term | None:
    """Argument of a role occurrence at the root of ``t``.

    In role-mode derivations the occurrence is a dotted marker; on
    concrete systems (scripted runs) it is located by matching the
    registered term.
    """
    if _role_of_marker(t) == role:
        return t.args[0]
    reg = sig.role(role)
    if reg is None:
        return None
    arg = classify.match_role(t, reg)
    if arg is not None and arg != t:
        return arg
    return None


def _role_const(sig: Signature, role: str, const: Term) -> Term:
    return sig.role_instance(role, const)


def _split(system: System, app: RuleApplication):
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    if isinstance(b, Meet):
        items = [SysIneq(Inequality(a, b.args[0]), si.side),
                 SysIneq(Inequality(a, b.args[1]), si.side)]
    elif isinstance(a, Join):
        items = [SysIneq(Inequality(a.args[0], b), si.side),
                 SysIneq(Inequality(a.args[1], b), si.side)]
    else:
        raise RuleMatchError("Split needs a meet on the right or a join on the left")
    return [system.replace_index(idx, items)], si.ineq, ()


def _resid_f(system: System, app: RuleApplication):
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    if not (isinstance(a, App) and a.decl.family == "F"):
        raise RuleMatchError("ResidF needs an F-connective on the left")
    if app.coord is None or not (1 <= app.coord <= a.decl.arity):
        raise RuleMatchError("ResidF needs a coordinate")
    h = app.coord - 1
    res_args = list(a.args)
    res_args[h] = b
    res = Residual(a.decl, app.coord, tuple(res_args))
    if a.decl.order_type[h] == "1":
        new = Inequality(a.args[h], res)
    else:
        new = Inequality(res, a.args[h])
    return [system.replace_index(idx, [SysIneq(new, si.side)])], si.ineq, ()


def _resid_g(system: System, app: RuleApplication):
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    if not (isinstance(b, App) and b.decl.family == "G"):
        raise RuleMatchError("ResidG needs a G-connective on the right")
    if app.coord is None or not (1 <= app.coord <= b.decl.arity):
        raise RuleMatchError("ResidG needs a coordinate")
    k = app.coord - 1
    res_args = list(b.args)
    res_args[k] = a
    res = Residual(b.decl, app.coord, tuple(res_args))
    if b.decl.order_type[k] == "1":
        new = Inequality(res, b.args[k])
    else:
        new = Inequality(b.args[k], res)
    return [system.replace_index(idx, [SysIneq(new, si.side)])], si.ineq, ()


_DOT_ADJ_RULES = {
    "AdjDotDia": (DotDia, "lhs"),
    "AdjDotBox": (DotBox, "rhs"),
    "AdjDotLhd": (DotLhd, "lhs"),
    "AdjDotRhd": (DotRhd, "rhs"),
}


def _adj_dot(system: System, app: RuleApplication):
    cls, where = _DOT_ADJ_RULES[app.rule_id]
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    if where == "lhs":
        if type(a) is not cls:
            raise RuleMatchError(f"{app.rule_id} does not match {print_inequality(si.ineq)}")
        phi = a.args[0]
        if cls is DotDia:
            new = Inequality(phi, DotDiaAdj((b,)))
        else:  # DotLhd
            new = Inequality(DotLhdAdj((b,)), phi)
    else:
        if type(b) is not cls:
            raise RuleMatchError(f"{app.rule_id} does not match {print_inequality(si.ineq)}")
        psi = b.args[0]
        if cls is DotBox:
            new = Inequality(DotBoxAdj((a,)), psi)
        else:  # DotRhd
            new = Inequality(psi, DotRhdAdj((a,)))
    return [system.replace_index(idx, [SysIneq(new, si.side)])], si.ineq, ()


def _approx_dot(d: Derivation, system: System, app: RuleApplication):
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    fresh: list[str] = []
    if app.rule_id == "ApproxDotDia":
        if not (isinstance(a, Nominal) and type(b) is DotDia):
            raise RuleMatchError("ApproxDotDia needs nominal <= dia(...)")
        j = d.fresh_nominal(system)
        fresh.append("#" + j.name)
        sys2 = system.replace_index(idx, [SysIneq(Inequality(a, DotDia((j,))), si.side)])
        sys2 = sys2.append([SysIneq(Inequality(j, b.args[0]))])
    elif app.rule_id == "ApproxDotBox":
        if not (type(a) is DotBox and isinstance(b, Conominal)):
            raise RuleMatchError("ApproxDotBox needs box(...) <= conominal")
        n = d.fresh_conominal(system)
        fresh.append("@" + n.name)
        sys2 = system.replace_index(idx, [SysIneq(Inequality(DotBox((n,)), b), si.side)])
        sys2 = sys2.append([SysIneq(Inequality(a.args[0], n))])
    elif app.rule_id == "ApproxDotLhd":
        if not (isinstance(a, Nominal) and type(b) is DotLhd):
            raise RuleMatchError("ApproxDotLhd needs nominal <= lhd(...)")
        n = d.fresh_conominal(system)
        fresh.append("@" + n.name)
        sys2 = system.replace_index(idx, [SysIneq(Inequality(a, DotLhd((n,))), si.side)])
        sys2 = sys2.append([SysIneq(Inequality(b.args[0], n))])
    elif app.rule_id == "ApproxDotRhd":
        if not (type(a) is DotRhd and isinstance(b, Conominal)):
            raise RuleMatchError("ApproxDotRhd needs rhd(...) <= conominal")
        j = d.fresh_nominal(system)
        fresh.append("#" + j.name)
        sys2 = system.replace_index(idx, [SysIneq(Inequality(DotRhd((j,)), b), si.side)])
        sys2 = sys2.append([SysIneq(Inequality(j, a.args[0]))])
    else:
        raise RuleMatchError(app.rule_id)
    return [sys2], si.ineq, tuple(fresh)


def _approx_f(d: Derivation, system: System, app: RuleApplication):
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    if not (isinstance(a, Nominal) and isinstance(b, App) and b.decl.family == "F"):
        raise RuleMatchError("ApproxF needs nominal <= f(...)")
    if b.decl.arity == 0:
        raise RuleMatchError("approximation does not apply to 0-ary connectives")
    fresh: list[str] = []
    atoms: list[Term] = []
    comps: list[SysIneq] = []
    sys_now = system
    for k in range(b.decl.arity):
        if b.decl.order_type[k] == "1":
            jk = d.fresh_nominal(sys_now)
            fresh.append("#" + jk.name)
            atoms.append(jk)
            comps.append(SysIneq(Inequality(jk, b.args[k])))
            sys_now = sys_now.append([comps[-1]])
        else:
            nk = d.fresh_conominal(sys_now)
            fresh.append("@" + nk.name)
            atoms.append(nk)
            comps.append(SysIneq(Inequality(b.args[k], nk)))
            sys_now = sys_now.append([comps[-1]])
    head = SysIneq(Inequality(a, App(b.decl, tuple(atoms))), si.side)
    sys2 = system.replace_index(idx, [head]).append(comps)
    return [sys2], si.ineq, tuple(fresh)


def _approx_g(d: Derivation, system: System, app: RuleApplication):
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    if not (isinstance(b, Conominal) and isinstance(a, App) and a.decl.family == "G"):
        raise RuleMatchError("ApproxG needs g(...) <= conominal")
    if a.decl.arity == 0:
        raise RuleMatchError("approximation does not apply to 0-ary connectives")
    fresh: list[str] = []
    atoms: list[Term] = []
    comps: list[SysIneq] = []
    sys_now = system
    for k in range(a.decl.arity):
        if a.decl.order_type[k] == "1":
            nk = d.fresh_conominal(sys_now)
            fresh.append("@" + nk.name)
            atoms.append(nk)
            comps.append(SysIneq(Inequality(a.args[k], nk)))
        else:
            jk = d.fresh_nominal(sys_now)
            fresh.append("#" + jk.name)
            atoms.append(jk)
            comps.append(SysIneq(Inequality(jk, a.args[k])))
        sys_now = sys_now.append([comps[-1]])
    head = SysIneq(Inequality(App(a.decl, tuple(atoms)), b), si.side)
    sys2 = system.replace_index(idx, [head]).append(comps)
    return [sys2], si.ineq, tuple(fresh)


_ROLE_ADJ = {"AdjPi": "pi", "AdjSigma": "sigma", "AdjLambda": "lambda", "AdjRho": "rho"}
_ROLE_APPROX = {"ApproxPi": "pi", "ApproxSigma": "sigma",
                "ApproxLambda": "lambda", "ApproxRho": "rho"}


def _adj_role(d: Derivation, system: System, app: RuleApplication):
    """Adjunction for a role occurrence (with its side condition) or,
    when the target is rooted in the defined modality itself, the bare
    adjoint flip (sound unconditionally: the defined maps are complete
    operators)."""
    role = _ROLE_ADJ[app.rule_id]
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    sig = d.sig
    if role == "pi":
        if type(a) is DefDia:
            items = [SysIneq(Inequality(a.args[0], BlackBox((b,))), si.side)]
        else:
            phi = _match_role_head(a, "pi", sig, d.role_mode)
            if phi is None:
                raise RuleMatchError(f"AdjPi does not match {print_inequality(si.ineq)}")
            items = [SysIneq(Inequality(phi, BlackBox((b,)))),
                     SysIneq(Inequality(_role_const(sig, "pi", BOT), b), side=True)]
    elif role == "sigma":
        if type(b) is DefBox:
            items = [SysIneq(Inequality(BlackDia((a,)), b.args[0]), si.side)]
        else:
            psi = _match_role_head(b, "sigma", sig, d.role_mode)
            if psi is None:
                raise RuleMatchError(f"AdjSigma does not match {print_inequality(si.ineq)}")
            items = [SysIneq(Inequality(BlackDia((a,)), psi)),
                     SysIneq(Inequality(a, _role_const(sig, "sigma", TOP)), side=True)]
    elif role == "lambda":
        if type(a) is DefLhd:
            items = [SysIneq(Inequality(BlackLhd((b,)), a.args[0]), si.side)]
        else:
            phi = _match_role_head(a, "lambda", sig, d.role_mode)
            if phi is None:
                raise RuleMatchError(f"AdjLambda does not match {print_inequality(si.ineq)}")
            items = [SysIneq(Inequality(BlackLhd((b,)), phi)),
                     SysIneq(Inequality(_role_const(sig, "lambda", TOP), b), side=True)]
    else:
        if type(b) is DefRhd:
            items = [SysIneq(Inequality(b.args[0], BlackRhd((a,))), si.side)]
        else:
            psi = _match_role_head(b, "rho", sig, d.role_mode)
            if psi is None:
                raise RuleMatchError(f"AdjRho does not match {print_inequality(si.ineq)}")
            items = [SysIneq(Inequality(psi, BlackRhd((a,)))),
                     SysIneq(Inequality(a, _role_const(sig, "rho", BOT)), side=True)]
    return [system.replace_index(idx, items)], si.ineq, ()


def _approx_role(d: Derivation, system: System, app: RuleApplication):
    role = _ROLE_APPROX[app.rule_id]
    idx, si = _target(system, app)
    a, b = si.ineq.lhs, si.ineq.rhs
    sig = d.sig
    fresh: list[str] = []
    if role == "pi":
        psi = _match_role_head(b, "pi", sig, d.role_mode)
        if not (isinstance(a, Nominal) and psi is not None):
            raise RuleMatchError(f"ApproxPi does not match {print_inequality(si.ineq)}")
        side_sys = system.replace_index(
            idx, [SysIneq(Inequality(a, _role_const(sig, "pi", BOT)), side=True)])
        j = d.fresh_nominal(system)
        fresh.append("#" + j.name)
        main = system.replace_index(idx, [SysIneq(Inequality(a, DefDia((j,))), si.side)])
        main = main.append([SysIneq(Inequality(j, psi))])
    elif role == "sigma":
        phi = _match_role_head(a, "sigma", sig, d.role_mode)
        if not (isinstance(b, Conominal) and phi is not None):
            raise RuleMatchError(f"ApproxSigma does not match {print_inequality(si.ineq)}")
        side_sys = system.replace_index(
            idx, [SysIneq(Inequality(_role_const(sig, "sigma", TOP), b), side=True)])
        n = d.fresh_conominal(system)
        fresh.append("@" + n.name)
        main = system.replace_index(idx, [SysIneq(Inequality(DefBox((n,)), b), si.side)])
        main = main.append([SysIneq(Inequality(phi, n))])
    elif role == "lambda":
        psi = _match_role_head(b, "lambda", sig, d.role_mode)
        if not (isinstance(a, Nominal) and psi is not None):
            raise RuleMatchError(f"ApproxLambda does not match {print_inequality(si.ineq)}")
        side_sys = system.replace_index(
            idx, [SysIneq(Inequality(a, _role_const(sig, "lambda", TOP)), side=True)])
        n = d.fresh_conominal(system)
        fresh.append("@" + n.name)
        main = system.replace_index(idx, [SysIneq(Inequality(a, DefLhd((n,))), si.side)])
        main = main.append([SysIneq(Inequality(psi, n))])
    else:
        phi = _match_role_head(a, "rho", sig, d.role_mode)
        if not (isinstance(b, Conominal) and phi is not None):
            raise RuleMatchError(f"ApproxRho does not match {print_inequality(si.ineq)}")
        side_sys = system.replace_index(
            idx, [SysIneq(Inequality(_role_const(sig, "rho", BOT), b), side=True)])
        j = d.fresh_nominal(system)
        fresh.append("#" + j.name)
        main = system.replace_index(idx, [SysIneq(Inequality(DefRhd((j,)), b), si.side)])
        main = main.append([SysIneq(Inequality(j, phi))])
    return [side_sys, main], si.ineq, tuple(fresh)


def _ackermann(system: System, app: RuleApplication):
    pivot = app.pivot
    if pivot is None:
        raise RuleMatchError("Ackermann rules need a pivot variable")
    right = app.rule_id == "AckermannRight"
    premises: list[int] = []
    others: list[int] = []
    for i, si in enumerate(system.ineqs):
        a, b = si.ineq.lhs, si.ineq.rhs
        if right and b == Var(pivot) and pivot not in free_vars(a):
            premises.append(i)
        elif not right and a == Var(pivot) and pivot not in free_vars(b):
            premises.append(i)
        else:
            others.append(i)
    for i in others:
        si = system.ineqs[i]
        pol_l = classify.polarity(si.ineq.lhs, pivot)
        pol_r = classify.polarity(si.ineq.rhs, pivot)
        if right:
            ok = pol_l in (classify.POSITIVE, classify.ABSENT) and \
                pol_r in (classify.NEGATIVE, classify.ABSENT)
        else:
            ok = pol_l in (classify.NEGATIVE, classify.ABSENT) and \
                pol_r in (classify.POSITIVE, classify.ABSENT)
        if not ok:
            raise AckermannShapeError(
                f"pivot {pivot} occurs with the wrong polarity in "
                f"{print_inequality(si.ineq)}")
    if right:
        alpha = big_join([system.ineqs[i].ineq.lhs for i in premises])
    else:
        alpha = big_meet([system.ineqs[i].ineq.rhs for i in premises])
    mapping = {pivot: alpha}
    out: list[SysIneq] = []
    seen: set[Inequality] = set()
    for i in others:
        si = system.ineqs[i]
        new = Inequality(substitute(si.ineq.lhs, mapping),
                         substitute(si.ineq.rhs, mapping))
        if new not in seen:
            seen.add(new)
            out.append(SysIneq(new, si.side))
    return [System(tuple(out), system.goal)], None, ()


_REWRITE_ROLES = {"RewritePi": "pi", "RewriteSigma": "sigma",
                  "RewriteLambda": "lambda", "RewriteRho": "rho"}


def _rewrite_role(d: Derivation, system: System, app: RuleApplication):
    role = _REWRITE_ROLES[app.rule_id]
    idx, si = _target(system, app)
    side = "lhs" if not app.path or app.path[0] == 0 else "rhs"
    term = si.ineq.lhs if side == "lhs" else si.ineq.rhs
    sub = subterm_at(term, app.path[1:])
    arg = _match_role_head(sub, role, d.sig, d.role_mode)
    if arg is None:
        raise RuleMatchError(f"{app.rule_id} does not match {print_term(sub)}")
    sig = d.sig
    if role == "pi":
        new_sub = join(_role_const(sig, "pi", BOT), DefDia((arg,)))
    elif role == "sigma":
        new_sub = meet(_role_const(sig, "sigma", TOP), DefBox((arg,)))
    elif role == "lambda":
        new_sub = join(_role_const(sig, "lambda", TOP), DefLhd((arg,)))
    else:
        new_sub = meet(_role_const(sig, "rho", BOT), DefRhd((arg,)))
    new_term = replace_at(term, app.path[1:], new_sub)
    new = Inequality(new_term, si.ineq.rhs) if side == "lhs" else \
        Inequality(si.ineq.lhs, new_term)
    return [system.replace_index(idx, [SysIneq(new, si.side)])], si.ineq, ()


# ----------------------------------------------------------------------
# preprocessing (applies to proto nodes: goal is None, single inequality)

# Parents that push down over a join child of positive sign, keyed by
# (parent class, parent sign); App entries additionally constrain the
# coordinate tonicity.
_PUSH_OVER_JOIN = {(Meet, MONO), (DotDia, MONO), (DotRhd, ANTI)}
_PUSH_OVER_MEET = {(Join, ANTI), (DotBox, ANTI), (DotLhd, MONO)}


def _pushable(parent: Term, parent_sign: int, tone: int, over_join: bool) -> bool:
    if isinstance(parent, App):
        if parent.decl.arity == 0:
            return False
        if over_join:
            return (parent.decl.family == "F" and parent_sign == MONO and tone == MONO) or \
                   (parent.decl.family == "G" and parent_sign == ANTI and tone == ANTI)
        return (parent.decl.family == "G" and parent_sign == ANTI and tone == MONO) or \
               (parent.decl.family == "F" and parent_sign == MONO and tone == ANTI)
    key = (type(parent), parent_sign)
    return key in (_PUSH_OVER_JOIN if over_join else _PUSH_OVER_MEET)


def _pia_only(t: Term, sign: int) -> bool:
    try:
        classes = classify.node_classes(t, sign)
    except classify.ClassifyError:
        return False
    if classes & {classify.LEAF, classify.CONSTANT}:
        return False
    return not (classes & classify.SKELETON)


def _has_critical_leaf(t: Term, sign: int, eps_map: dict[str, str] | None) -> bool:
    if eps_map is None:
        return True  # exhaustive mode distributes unconditionally
    for name, s, _ in var_occurrences(t, sign):
        if name in eps_map and (s == MONO) == (eps_map[name] == "1"):
            return True
    return False


def _find_distribution(t: Term, sign: int, eps_map, below_pia: bool,
                       path: tuple[int, ...]) -> tuple[tuple[int, ...], int] | None:
    """Pre-order search for parent-position + coordinate of a pushable
    delta node (a positive join / negative meet child)."""
    for k, (child, tone) in enumerate(zip(t.args, t.tonicities())):
        child_sign = sign * tone
        over_join = isinstance(child, Join) and child_sign == MONO
        over_meet = isinstance(child, Meet) and child_sign == ANTI
        if (over_join or over_meet) and not below_pia:
            if _pushable(t, sign, tone, over_join) and \
                    _has_critical_leaf(child, child_sign, eps_map):
                return path, k
    for k, (child, tone) in enumerate(zip(t.args, t.tonicities())):
        found = _find_distribution(
            child, sign * tone, eps_map,
            below_pia or _pia_only(t, sign), path + (k,))
        if found is not None:
            return found
    return None


def _sign_at(t: Term, pos: tuple[int, ...]) -> int:
    sign = MONO
    for i in pos:
        sign *= t.tonicities()[i]
        t = t.args[i]
    return sign


def _role_dist_rule(parent: Term) -> str:
    return {DotDia: "DistPi", DotBox: "DistSigma",
            DotLhd: "DistLambda", DotRhd: "DistRho"}[type(parent)]


def find_preprocess_step(ineq: Inequality, eps_map: dict[str, str] | None,
                         role_mode: bool) -> RuleApplication | None:
    """First applicable stage-one step: distribution, splitting, variable
    elimination.  ``eps_map`` None means exhaustive (epsilon-independent)
    distribution; in auto mode only delta nodes with a critical leaf
    below them are cleared."""
    for side_idx, (term, sign) in enumerate(((ineq.lhs, MONO), (ineq.rhs, ANTI))):
        found = _find_distribution(term, sign, eps_map, False, ())
        if found is not None:
            pos, k = found
            parent = subterm_at(term, pos)
            if role_mode and type(parent) in ROLE_BY_DOT:
                rid = _role_dist_rule(parent)
            else:
                rid = "DistributePre"
            return RuleApplication(rid, ineq_index=0, path=(side_idx,) + pos, coord=k + 1)
    if isinstance(ineq.lhs, Join) or isinstance(ineq.rhs, Meet):
        return RuleApplication("Split", ineq_index=0)
    lhs_vars = free_vars(ineq.lhs)
    rhs_vars = free_vars(ineq.rhs)
    for v in sorted(lhs_vars & rhs_vars):
        pol_l = classify.polarity(ineq.lhs, v)
        pol_r = classify.polarity(ineq.rhs, v)
        if pol_l == classify.NEGATIVE and pol_r == classify.POSITIVE:
            return RuleApplication("MonotoneElim", ineq_index=0, pivot=v, coord=0)
        if pol_l == classify.POSITIVE and pol_r == classify.NEGATIVE:
            return RuleApplication("MonotoneElim", ineq_index=0, pivot=v, coord=1)
    return None


def _preprocess_rule(d: Derivation, system: System, app: RuleApplication):
    if system.goal is not None:
        raise RuleMatchError(f"{app.rule_id} applies before first approximation")
    idx, si = _target(system, app)
    ineq = si.ineq
    if app.rule_id in ("DistributePre", "DistPi", "DistSigma", "DistLambda", "DistRho"):
        side_idx, pos = app.path[0], app.path[1:]
        term = ineq.lhs if side_idx == 0 else ineq.rhs
        parent = subterm_at(term, pos)
        if app.coord is None or not (1 <= app.coord <= len(parent.args)):
            raise RuleMatchError("distribution needs a coordinate")
        k = app.coord - 1
        child = parent.args[k]
        sign = (MONO if side_idx == 0 else ANTI) * _sign_at(term, pos)
        child_sign = sign * parent.tonicities()[k]
        over_join = isinstance(child, Join) and child_sign == MONO
        over_meet = isinstance(child, Meet) and child_sign == ANTI
        if not (over_join or over_meet) or not _pushable(
                parent, sign, parent.tonicities()[k], over_join):
            raise RuleMatchError("distribution does not match at this position")
        new_term = _apply_distribution_signed(term, MONO if side_idx == 0 else ANTI, pos, k)
        new = Inequality(new_term, ineq.rhs) if side_idx == 0 else \
            Inequality(ineq.lhs, new_term)
        return [system.replace_index(idx, [SysIneq(new, si.side)])], ineq, ()
    if app.rule_id == "Split":
        a, b = ineq.lhs, ineq.rhs
        if isinstance(a, Join):
            parts = [Inequality(a.args[0], b), Inequality(a.args[1], b)]
        elif isinstance(b, Meet):
            parts = [Inequality(a, b.args[0]), Inequality(a, b.args[1])]
        else:
            raise RuleMatchError("preprocessing Split does not match")
        return [System((SysIneq(p),), None) for p in parts], ineq, ()
    if app.rule_id == "MonotoneElim":
        if app.pivot is None:
            raise RuleMatchError("MonotoneElim needs a variable")
        value = BOT if app.coord == 0 else TOP
        new = Inequality(substitute(ineq.lhs, {app.pivot: value}),
                         substitute(ineq.rhs, {app.pivot: value}))
        return [system.replace_index(idx, [SysIneq(new, si.side)])], ineq, ()
    raise RuleMatchError(app.rule_id)


def _apply_distribution_signed(term: Term, root_sign: int, pos: tuple[int, ...], k: int) -> Term:
    # combinator is a join when the parent is positively signed
    parent = subterm_at(term, pos)
    child = parent.args[k]
    left_args = list(parent.args)
    right_args = list(parent.args)
    left_args[k] = child.args[0]
    right_args[k] = child.args[1]
    one = parent.with_args(tuple(left_args))
    two = parent.with_args(tuple(right_args))
    parent_sign = root_sign * _sign_at(term, pos)
    combined = join(one, two) if parent_sign == MONO else meet(one, two)
    return replace_at(term, pos, combined)


def _first_approx(system: System, app: RuleApplication):
    if system.goal is not None or len(system.ineqs) != 1:
        raise RuleMatchError("FirstApprox applies to a single preprocessed inequality")
    ineq = system.ineqs[0].ineq
    i0, m0 = Nominal("i0"), Conominal("m0")
    used = free_vars(ineq.lhs) | free_vars(ineq.rhs) | nominals_of(ineq.lhs) | \
        nominals_of(ineq.rhs) | conominals_of(ineq.lhs) | conominals_of(ineq.rhs)
    if "i0" in used or "m0" in used:
        raise FreshnessError("input already uses the reserved names i0/m0")
    sys2 = System(
        (SysIneq(Inequality(i0, ineq.lhs)), SysIneq(Inequality(ineq.rhs, m0))),
        goal=Inequality(i0, m0))
    return [sys2], ineq, ("#i0", "@m0")


# ----------------------------------------------------------------------
# dispatcher

def apply_rule(d: Derivation, app: RuleApplication,
               node_id: int | None = None) -> list[int]:
    """Apply ``app`` at a leaf (default: leftmost open leaf); returns the
    new node ids (two for branching rules)."""
    if node_id is None:
        leaves = d.open_leaves()
        if not leaves:
            raise EngineError("no open leaf to extend")
        node_id = leaves[0]
    node = d.node(node_id)
    if node.children:
        raise EngineError(f"node {node_id} is not a leaf")
    system = node.system

    rid = app.rule_id
    if rid in ("DistributePre", "DistPi", "DistSigma", "DistLambda", "DistRho",
               "Split", "MonotoneElim") and system.goal is None:
        results, principal, fresh = _preprocess_rule(d, system, app)
    elif rid == "FirstApprox":
        results, principal, fresh = _first_approx(system, app)
    elif rid == "Split":
        results, principal, fresh = _split(system, app)
    elif rid == "ResidF":
        results, principal, fresh = _resid_f(system, app)
    elif rid == "ResidG":
        results, principal, fresh = _resid_g(system, app)
    elif rid in _DOT_ADJ_RULES:
        results, principal, fresh = _adj_dot(system, app)
    elif rid in ("ApproxDotDia", "ApproxDotBox", "ApproxDotLhd", "ApproxDotRhd"):
        results, principal, fresh = _approx_dot(d, system, app)
    elif rid == "ApproxF":
        results, principal, fresh = _approx_f(d, system, app)
    elif rid == "ApproxG":
        results, principal, fresh = _approx_g(d, system, app)
    elif rid in _ROLE_ADJ:
        results, principal, fresh = _adj_role(d, system, app)
    elif rid in _ROLE_APPROX:
        results, principal, fresh = _approx_role(d, system, app)
    elif rid in ACKERMANN_RULE_IDS:
        results, principal, fresh = _ackermann(system, app)
    elif rid in _REWRITE_ROLES:
        results, principal, fresh = _rewrite_role(d, system, app)
    else:
        raise RuleMatchError(f"unknown rule {rid!r}")

    for name in fresh:
        bare = name.lstrip("#@")
        if bare in system.symbols():
            raise FreshnessError(f"fresh symbol {name} already occurs in the system")

    target_side = False
    if app.ineq_index is not None and 0 <= app.ineq_index < len(system.ineqs):
        target_side = system.ineqs[app.ineq_index].side

    out = []
    branch_tags = ("A", "B") if len(results) == 2 and rid in _ROLE_APPROX else \
        ("A", "B") if len(results) == 2 and rid == "Split" and system.goal is None else \
        (None,) * len(results)
    for tag, sys2 in zip(branch_tags, results):
        child_app = replace(app, branch=tag) if tag else app
        out.append(d._add_child(node_id, child_app, sys2, principal, fresh, target_side))
    return out


# ----------------------------------------------------------------------
# automatic strategy

@dataclass(frozen=True)
class _Stuck:
    message: str
    blocking: Inequality


def _red_sign(side: int, tree_sign: int) -> int:
    """Sign of an occurrence inside a system inequality: occurrences on
    the left keep their tree sign, occurrences on the right flip it.
    (Antecedent inequalities sit on the assumption side of the implied
    quasi-inequality, which dualizes the preprocessing convention.)"""
    return tree_sign if side == 0 else -tree_sign


def _critical_red(eps_entry: str) -> int:
    # Displayed premises for an eps=1 pivot have shape alpha <= p, whose
    # p sits negatively in the reduction sense; dually for eps=d.
    return ANTI if eps_entry == "1" else MONO


def _display_step(system: System, pivot: str, eps_entry: str,
                  role_mode: bool) -> RuleApplication | _Stuck | None:
    want = _critical_red(eps_entry)
    for idx, si in enumerate(system.ineqs):
        ineq = si.ineq
        a, b = ineq.lhs, ineq.rhs
        if eps_entry == "1" and b == Var(pivot):
            if pivot in free_vars(a):
                return _Stuck(f"pivot {pivot} occurs inside its own premise", ineq)
            continue  # displayed
        if eps_entry == "d" and a == Var(pivot):
            if pivot in free_vars(b):
                return _Stuck(f"pivot {pivot} occurs inside its own premise", ineq)
            continue
        occ_side: int | None = None
        for side, term in ((0, a), (1, b)):
            for name, s, _path in var_occurrences(term):
                if name == pivot and _red_sign(side, s) == want:
                    occ_side = side
                    break
            if occ_side is not None:
                break
        if occ_side is None:
            continue
        if si.side:
            return _Stuck(
                f"critical occurrence of {pivot} inside a side condition", ineq)
        app = _display_rule(system, idx, occ_side, role_mode, pivot, want)
        if app is None:
            return _Stuck(
                f"no display rule for {pivot} in {print_inequality(ineq)}", ineq)
        return app
    return None


def _occurrence_coord(root: Term, occ_side: int, pivot: str, want: int) -> int | None:
    """1-based coordinate of ``root`` whose subtree holds a wanted
    occurrence of the pivot."""
    for k, (child, tone) in enumerate(zip(root.args, root.tonicities())):
        for name, s, _ in var_occurrences(child, tone):
            if name == pivot and _red_sign(occ_side, s) == want:
                return k + 1
    return None


def _display_rule(system: System, idx: int, occ_side: int, role_mode: bool,
                  pivot: str, want: int) -> RuleApplication | None:
    ineq = system.ineqs[idx].ineq
    a, b = ineq.lhs, ineq.rhs
    if occ_side == 1:
        root = b
        if isinstance(root, Meet):
            return RuleApplication("Split", ineq_index=idx)
        if isinstance(root, App):
            if root.decl.family == "G":
                k = _occurrence_coord(root, occ_side, pivot, want)
                if k is None:
                    return None
                return RuleApplication("ResidG", ineq_index=idx, coord=k)
            if root.decl.family == "F" and isinstance(a, Nominal) and root.decl.arity > 0:
                return RuleApplication("ApproxF", ineq_index=idx)
            return None
        cls = type(root)
        if cls is DotDia:
            if not isinstance(a, Nominal):
                return None
            return RuleApplication("ApproxPi" if role_mode else "ApproxDotDia",
                                   ineq_index=idx)
        if cls is DotBox:
            return RuleApplication("AdjSigma" if role_mode else "AdjDotBox",
                                   ineq_index=idx)
        if cls is DotLhd:
            if not isinstance(a, Nominal):
                return None
            return RuleApplication("ApproxLambda" if role_mode else "ApproxDotLhd",
                                   ineq_index=idx)
        if cls is DotRhd:
            return RuleApplication("AdjRho" if role_mode else "AdjDotRhd",
                                   ineq_index=idx)
        return None
    root = a
    if isinstance(root, Join):
        return RuleApplication("Split", ineq_index=idx)
    if isinstance(root, App):
        if root.decl.family == "F":
            k = _occurrence_coord(root, occ_side, pivot, want)
            if k is None:
                return None
            return RuleApplication("ResidF", ineq_index=idx, coord=k)
        if root.decl.family == "G" and isinstance(b, Conominal) and root.decl.arity > 0:
            return RuleApplication("ApproxG", ineq_index=idx)
        return None
    cls = type(root)
    if cls is DotDia:
        return RuleApplication("AdjPi" if role_mode else "AdjDotDia", ineq_index=idx)
    if cls is DotBox:
        if not isinstance(b, Conominal):
            return None
        return RuleApplication("ApproxSigma" if role_mode else "ApproxDotBox",
                               ineq_index=idx)
    if cls is DotLhd:
        return RuleApplication("AdjLambda" if role_mode else "AdjDotLhd", ineq_index=idx)
    if cls is DotRhd:
        if not isinstance(b, Conominal):
            return None
        return RuleApplication("ApproxRho" if role_mode else "ApproxDotRhd",
                               ineq_index=idx)
    return None


def _occurs(system: System, pivot: str) -> bool:
    return any(pivot in free_vars(si.ineq.lhs) | free_vars(si.ineq.rhs)
               for si in system.ineqs)


_MAX_ATTEMPT_STEPS = 10_000


def _attempt(input_ineq: Inequality, internal: Inequality,
             witness: "classify.InductiveWitness", order: tuple[str, ...],
             mode: str, sig: Signature) -> Derivation:
    d = Derivation(input_ineq, sig, mode, internal_root=internal)
    eps_map = dict(zip(witness.variables, witness.epsilon.entries))
    stuck: list[StuckReport] = []
    steps = [0]

    def tick() -> None:
        steps[0] += 1
        if steps[0] > _MAX_ATTEMPT_STEPS:
            raise EngineError("attempt exceeded the step budget")

    # stage one: preprocessing
    pieces: list[int] = []
    queue = [0]
    while queue:
        nid = queue.pop(0)
        system = d.node(nid).system
        step = find_preprocess_step(system.ineqs[0].ineq, eps_map, d.role_mode)
        if step is None:
            pieces.append(nid)
            continue
        tick()
        children = apply_rule(d, step, nid)
        queue = children + queue

    def solve(nid: int, k: int) -> bool:
        while k < len(order):
            pivot = order[k]
            system = d.node(nid).system
            step = _display_step(system, pivot, eps_map[pivot], d.role_mode)
            if isinstance(step, _Stuck):
                stuck.append(StuckReport((pivot,), (step.blocking,), step.message))
                return False
            if step is None:
                if _occurs(system, pivot):
                    rid = "AckermannRight" if eps_map[pivot] == "1" else "AckermannLeft"
                    try:
                        tick()
                        ids = apply_rule(
                            d, RuleApplication(rid, pivot=pivot), nid)
                    except AckermannShapeError as exc:
                        stuck.append(StuckReport((pivot,), (), str(exc)))
                        return False
                    nid = ids[0]
                k += 1
                continue
            tick()
            try:
                ids = apply_rule(d, step, nid)
            except EngineError as exc:
                stuck.append(StuckReport((pivot,), (), str(exc)))
                return False
            if len(ids) == 1:
                nid = ids[0]
            else:
                ok = True
                for child in ids:
                    ok = solve(child, k) and ok
                return ok
        leftover = sorted(
            set().union(*(free_vars(si.ineq.lhs) | free_vars(si.ineq.rhs)
                          for si in d.node(nid).system.ineqs), set()))
        if leftover:
            stuck.append(StuckReport(tuple(leftover), d.node(nid).system.inequalities(),
                                     "variables left after the elimination cycle"))
            return False
        return True

    ok = True
    for nid in pieces:
        tick()
        first = apply_rule(d, RuleApplication("FirstApprox"), nid)[0]
        ok = solve(first, 0) and ok

    if ok:
        pure = tuple(d.node_system_concrete(leaf) for leaf in d.leaves())
        d.status = RunStatus("success", pure_systems=pure)
    else:
        d.status = RunStatus("failure", stuck=stuck[0] if stuck else None)
    return d


def _count_prep_steps(ineq: Inequality, eps_map: dict[str, str],
                      role_mode: bool) -> int:
    work = [ineq]
    steps = 0
    while work and steps < 200:
        cur = work.pop()
        step = find_preprocess_step(cur, eps_map, role_mode)
        if step is None:
            continue
        steps += 1
        systems, _, _ = _preprocess_rule(
            None, System((SysIneq(cur),), None), step)  # type: ignore[arg-type]
        for s in systems:
            work.append(s.ineqs[0].ineq)
    return steps


def run_alba(ineq: Inequality, sig: Signature, mode: str = "alba",
             strategy: str = "auto", script: str | None = None) -> Derivation:
    """Reduce an inequality to pure quasi-inequalities.

    Auto strategy: candidate witnesses (order type plus an elimination
    order linearizing the dependency order) are attempted in a fixed
    order -- fewest stage-one rewrites first, then lexicographic order
    type with 1 before d -- and the first successful attempt is returned.
    Non-(meta-)inductive inputs yield a failure status, not an exception.
    """
    if mode not in ("alba", "albae"):
        raise ValueError(f"unknown mode {mode!r}")
    if strategy != "auto":
        return run_scripted(ineq, sig, mode, script or "")

    if mode == "alba":
        witnesses = classify.inductive_witnesses(ineq)
        cands = [(ineq, w) for w in witnesses]
        why = "input is not inductive"
    else:
        cands = classify.meta_inductive_witnesses(ineq, sig)
        why = "input is not meta-inductive"
    if not cands:
        d = Derivation(ineq, sig, mode)
        d.status = RunStatus("failure", stuck=StuckReport(
            classify.variables_of(ineq), (ineq,), why))
        return d

    role_mode = mode == "albae"
    scored: list[tuple[int, int, Inequality, classify.InductiveWitness]] = []
    for i, (internal, w) in enumerate(cands):
        eps_map = dict(zip(w.variables, w.epsilon.entries))
        scored.append((_count_prep_steps(internal, eps_map, role_mode), i, internal, w))
    scored.sort(key=lambda item: (item[0], item[1]))

    first_failure: Derivation | None = None
    for _, _, internal, w in scored:
        for order in w.linearizations():
            try:
                d = _attempt(ineq, internal, w, order, mode, sig)
            except EngineError:
                continue
            if d.status.kind == "success":
                return d
            if first_failure is None:
                first_failure = d
    if first_failure is None:
        d = Derivation(ineq, sig, mode)
        d.status = RunStatus("failure", stuck=StuckReport(
            classify.variables_of(ineq), (ineq,), "no workable witness"))
        return d
    return first_failure


# ----------------------------------------------------------------------
# safety and syntactic invariants

def is_safe(d: Derivation) -> bool:
    """No flagged side condition is rewritten except by Ackermann
    substitution."""
    for node in d.nodes:
        if node.rule is None:
            continue
        if node.rule.rule_id in ACKERMANN_RULE_IDS:
            continue
        if node.target_was_side:
            return False
    return True


# Def-A.1 style polarity audit.  Members of the first group must occur
# positively in syntactically closed terms (negatively in open ones); the
# second group dually.  The dotted adjoints are classified with the
# corresponding residuals, the coimplication with the join residuals.
_CLOSED_POSITIVE = (Nominal, BlackLhd, BlackDia, DotBoxAdj, DotLhdAdj, Coimp)
_CLOSED_NEGATIVE = (Conominal, BlackBox, BlackRhd, DotDiaAdj, DotRhdAdj, Arrow)


def _residual_group(t: Residual) -> int:
    """+1 for the closed-positive group, -1 for the closed-negative."""
    entry = t.decl.order_type[t.coord - 1]
    if t.decl.family == "F":
        return 1 if entry == "d" else -1
    return 1 if entry == "1" else -1


def _audit(t: Term, sign: int, closed: bool) -> bool:
    group = 0
    if isinstance(t, _CLOSED_POSITIVE):
        group = 1
    elif isinstance(t, _CLOSED_NEGATIVE):
        group = -1
    elif isinstance(t, Residual):
        group = _residual_group(t)
    if group == 1 and (sign == MONO) != closed:
        return False
    if group == -1 and (sign == ANTI) != closed:
        return False
    return all(_audit(a, sign * tone, closed)
               for a, tone in zip(t.args, t.tonicities()))


def is_syntactically_closed(t: Term) -> bool:
    return _audit(t, MONO, True)


def is_syntactically_open(t: Term) -> bool:
    return _audit(t, MONO, False)


def check_topological_adequacy(system: System, sig: Signature) -> bool:
    """Every adjoint-headed inequality has its paired side condition."""
    for si in system.ineqs:
        a, b = si.ineq.lhs, si.ineq.rhs
        if isinstance(b, BlackBox):
            if sig.role("pi") is None or not system.contains(
                    Inequality(sig.role_instance("pi", BOT), b.args[0])):
                return False
        if isinstance(a, BlackDia):
            if sig.role("sigma") is None or not system.contains(
                    Inequality(a.args[0], sig.role_instance("sigma", TOP))):
                return False
        if isinstance(b, BlackRhd):
            if sig.role("rho") is None or not system.contains(
                    Inequality(b.args[0], sig.role_instance("rho", BOT))):
                return False
        if isinstance(a, BlackLhd):
            if sig.role("lambda") is None or not system.contains(
                    Inequality(sig.role_instance("lambda", TOP), a.args[0])):
                return False
    return True


def check_compact_appropriate(system: System) -> bool:
    """Left sides syntactically closed, right sides open, for every
    inequality still mentioning a propositional variable.  (Pure
    inequalities need no shape: the Ackermann lemmas place them in the
    untouched part of the system.)"""
    for si in system.ineqs:
        if not (free_vars(si.ineq.lhs) | free_vars(si.ineq.rhs)):
            continue
        if not is_syntactically_closed(si.ineq.lhs):
            return False
        if not is_syntactically_open(si.ineq.rhs):
            return False
    return True


# ----------------------------------------------------------------------
# public stage-one operations

def preprocess(ineq: Inequality, sig: Signature | None = None) -> list[Inequality]:
    """Exhaustive stage-one rewriting: distribution, splitting, monotone
    variable elimination.  Role-term structure is not consulted."""
    work = [ineq]
    out: list[Inequality] = []
    guard = 0
    while work:
        guard += 1
        if guard > 10_000:
            raise EngineError("preprocessing did not terminate")
        cur = work.pop(0)
        step = find_preprocess_step(cur, None, False)
        if step is None:
            out.append(cur)
            continue
        systems, _, _ = _preprocess_rule(
            None, System((SysIneq(cur),), None), step)  # type: ignore[arg-type]
        work = [s.ineqs[0].ineq for s in systems] + work
    return out


def first_approximation(ineq: Inequality) -> System:
    systems, _, _ = _first_approx(System((SysIneq(ineq),), None),
                                  RuleApplication("FirstApprox"))
    return systems[0]


# ----------------------------------------------------------------------
# trace export and scripts

def trace_lines(d: Derivation) -> list[str]:
    lines = []
    for node in d.nodes:
        system = d.concretize_system(node.system)
        side = sorted(i for i, si in enumerate(system.ineqs) if si.side)
        body = " ;; ".join(print_inequality(si.ineq) for si in system.ineqs)
        goal = print_inequality(system.goal) if system.goal else "-"
        principal = "-"
        if node.principal is not None:
            principal = print_inequality(Inequality(
                d.concretize_term(node.principal.lhs),
                d.concretize_term(node.principal.rhs)))
        rule = node.rule.label() if node.rule else "-"
        parent = "-" if node.parent is None else str(node.parent)
        lines.append(
            f"node:{node.id} | parent:{parent} | rule:{rule} | "
            f"principal:{principal} | side:{{{','.join(map(str, side))}}} | "
            f"system: {body} |- {goal}")
    if d.status.kind == "failure" and d.status.stuck is not None:
        s = d.status.stuck
        lines.append(f"stuck: vars={','.join(s.variables)} : {s.message}")
    lines.append(f"status: {d.status.kind}")
    return lines


import re as _re

_SCRIPT_RE = _re.compile(
    r"^(?P<rid>[A-Za-z]+)(?:\((?P<coord>\d+)\))?"
    r"(?:\s*@\s*(?P<target>[A-Za-z0-9_]+))?"
    r"(?:\s*/\s*(?P<path>[\d.]+|-))?\s*$")


def parse_script(text: str) -> list[RuleApplication | str]:
    out: list[RuleApplication | str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "done":
            out.append("done")
            continue
        m = _SCRIPT_RE.match(line)
        if not m:
            raise EngineError(f"script line {lineno}: cannot parse {line!r}")
        rid = m.group("rid")
        coord = int(m.group("coord")) if m.group("coord") else None
        target = m.group("target")
        ineq_index = None
        pivot = None
        if target is not None:
            if target.isdigit():
                ineq_index = int(target)
            else:
                pivot = target
        path: tuple[int, ...] = ()
        if m.group("path") and m.group("path") != "-":
            path = tuple(int(x) for x in m.group("path").split("."))
        out.append(RuleApplication(rid, ineq_index=ineq_index, path=path,
                                   coord=coord, pivot=pivot))
    return out


def run_scripted(ineq: Inequality, sig: Signature, mode: str,
                 script_text: str) -> Derivation:
    """Apply the script's rules in order, each to the leftmost open leaf."""
    d = Derivation(ineq, sig, mode)
    try:
        steps = parse_script(script_text)
        for step in steps:
            if step == "done":
                leaves = d.open_leaves()
                if leaves:
                    d.closed.add(leaves[0])
                continue
            apply_rule(d, step)
    except EngineError as exc:
        d.status = RunStatus("failure", stuck=StuckReport((), (), str(exc)))
        return d
    bad: list[str] = []
    for leaf in d.leaves():
        system = d.node(leaf).system
        if system.goal is None:
            bad.append("leaf without first approximation")
            continue
        for si in system.ineqs:
            bad.extend(sorted(free_vars(si.ineq.lhs) | free_vars(si.ineq.rhs)))
    if bad:
        d.status = RunStatus("failure", stuck=StuckReport(
            tuple(dict.fromkeys(bad)), (), "script left a non-pure system"))
    else:
        d.status = RunStatus(
            "success",
            pure_systems=tuple(d.node_system_concrete(l) for l in d.leaves()))
    return d
