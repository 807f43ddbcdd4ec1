"""Signed generation trees and the syntactic inequality hierarchy.

Nodes of a signed tree are classified by the standard two-column table:
Skeleton nodes (delta-adjoints and SLR) support approximation from the
outside in, PIA nodes (SRA and SRR) support residuation/adjunction from
the inside out.  A branch is good when, read from the leaf, it is a block
of PIA nodes followed by a block of Skeleton nodes; excellent when the
PIA block contains only SRA nodes.

Some node shapes are eligible for several classes (e.g. a positive meet
is a delta-adjoint, SRA and SLR).  Goodness is decided per branch by the
split with the shortest PIA block, which both maximizes goodness and
minimizes SRR obligations.

An inequality is epsilon-Sahlqvist when every epsilon-critical branch of
+lhs and -rhs is excellent, and (Omega, epsilon)-inductive when every
critical branch is good and the side terms of SRR nodes on critical
branches agree with the opposite order type and only mention strictly
Omega-smaller variables.  Meta-inductive inequalities are the images of
inductive dotted-language inequalities under substitution of registered
role terms for the dotted modalities.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .language import (
    ANTI, MONO, ROLES, App, Bot, DOT_BY_ROLE, DotBox, DotDia, DotLhd,
    DotRhd, Inequality, Join, Layer, Meet, OrderType, RegisteredTerm,
    Signature, Term, Top, Var, free_vars, layer_of, var_occurrences,
)

POSITIVE = "positive"
NEGATIVE = "negative"
BOTH = "both"
ABSENT = "absent"

DELTA = "delta"
SRA = "sra"
SLR = "slr"
SRR = "srr"
LEAF = "leaf"
CONSTANT = "constant"

SKELETON = frozenset({DELTA, SLR})
PIA = frozenset({SRA, SRR})

MAX_VARIABLES = 12


class ClassifyError(ValueError):
    pass


def polarity(t: Term, var: str) -> str:
    """Uniform sign of the occurrences of ``var`` in the positive tree of t."""
    signs = {s for name, s, _ in var_occurrences(t) if name == var}
    if not signs:
        return ABSENT
    if signs == {MONO}:
        return POSITIVE
    if signs == {ANTI}:
        return NEGATIVE
    return BOTH


def node_classes(t: Term, sign: int) -> frozenset[str]:
    """Table-1 eligibility set of a signed node (DLE/DLEstar shapes only)."""
    if isinstance(t, Var):
        return frozenset({LEAF})
    if isinstance(t, (Top, Bot)) or (isinstance(t, App) and t.decl.arity == 0):
        return frozenset({CONSTANT})
    if isinstance(t, Meet):
        return frozenset({DELTA, SRA, SLR}) if sign == MONO else frozenset({DELTA, SRR})
    if isinstance(t, Join):
        return frozenset({DELTA, SRR}) if sign == MONO else frozenset({DELTA, SRA, SLR})
    if isinstance(t, App):
        if t.decl.family == "F":
            if sign == MONO:
                return frozenset({SLR})
            return frozenset({SRA}) if t.decl.arity == 1 else frozenset({SRR})
        if sign == MONO:
            return frozenset({SRA}) if t.decl.arity == 1 else frozenset({SRR})
        return frozenset({SLR})
    if isinstance(t, (DotDia, DotLhd)):
        return frozenset({SLR}) if sign == MONO else frozenset({SRA})
    if isinstance(t, (DotBox, DotRhd)):
        return frozenset({SRA}) if sign == MONO else frozenset({SLR})
    raise ClassifyError(f"node {type(t).__name__} has no Table-1 classification")


@dataclass(frozen=True)
class SignedNode:
    term: Term
    sign: int
    classes: frozenset[str]
    children: tuple["SignedNode", ...]

    @property
    def layer_flavor(self) -> Layer:
        return Layer.DLESTAR if layer_of(self.term) >= Layer.DLESTAR else Layer.DLE


def signed_tree(t: Term, sign: int) -> SignedNode:
    if layer_of(t) > Layer.DLESTAR:
        raise ClassifyError(
            "signed generation trees are defined for DLE/DLEstar terms only")
    children = tuple(
        signed_tree(a, sign * tone) for a, tone in zip(t.args, t.tonicities())
    )
    return SignedNode(t, sign, node_classes(t, sign), children)


@dataclass(frozen=True)
class SrrObligation:
    node: SignedNode
    sibling: SignedNode


@dataclass(frozen=True)
class BranchAnalysis:
    var: str
    leaf_sign: int
    path: tuple[SignedNode, ...]  # leaf's proper ancestors, leaf side first
    is_good: bool
    is_excellent: bool
    is_skeleton: bool
    is_definite: bool
    p1: tuple[SignedNode, ...]
    p2: tuple[SignedNode, ...]
    srr_obligations: tuple[SrrObligation, ...]


def branches(root: SignedNode) -> list[BranchAnalysis]:
    """Analyses of all variable-leaf branches of a signed tree."""
    out: list[BranchAnalysis] = []

    def walk(node: SignedNode, trail: list[SignedNode]) -> None:
        trail.append(node)
        if isinstance(node.term, Var):
            out.append(_analyse(tuple(reversed(trail))))
        else:
            for child in node.children:
                walk(child, trail)
        trail.pop()

    walk(root, [])
    return out


def _analyse(chain: tuple[SignedNode, ...]) -> BranchAnalysis:
    # chain runs from the leaf up to the root; chain[0] is the Var leaf
    leaf = chain[0]
    path = chain[1:]
    n = len(path)
    k = n
    while k > 0 and path[k - 1].classes & SKELETON:
        k -= 1
    p1, p2 = path[:k], path[k:]
    good = all(node.classes & PIA for node in p1)
    excellent = good and all(SRA in node.classes for node in p1)
    definite = good and all(SLR in node.classes for node in p2)
    obligations: list[SrrObligation] = []
    if good:
        for i, node in enumerate(p1):
            if SRR in node.classes:
                through = chain[i]  # the child the branch passes through
                for child in node.children:
                    if child is not through:
                        obligations.append(SrrObligation(node, child))
    return BranchAnalysis(
        var=leaf.term.name, leaf_sign=leaf.sign, path=path, is_good=good,
        is_excellent=excellent, is_skeleton=(k == 0), is_definite=definite,
        p1=p1, p2=p2, srr_obligations=tuple(obligations))


@dataclass(frozen=True)
class InductiveWitness:
    variables: tuple[str, ...]
    epsilon: OrderType
    omega: frozenset[tuple[str, str]]  # (smaller, larger) pairs, transitive

    def eps_of(self, var: str) -> str:
        return self.epsilon[self.variables.index(var)]

    def linearizations(self):
        """All variable orders compatible with omega, lexicographically."""
        from itertools import permutations
        for perm in permutations(self.variables):
            pos = {v: i for i, v in enumerate(perm)}
            if all(pos[a] < pos[b] for a, b in self.omega):
                yield perm


def variables_of(ineq: Inequality) -> tuple[str, ...]:
    return tuple(sorted(free_vars(ineq.lhs) | free_vars(ineq.rhs)))


def _is_critical(sign: int, eps_entry: str) -> bool:
    return (sign == MONO) == (eps_entry == "1")


def _agrees_with_opposite(node: SignedNode, eps: dict[str, str]) -> bool:
    """Every variable leaf of the signed subtree is epsilon-dual-critical."""
    if isinstance(node.term, Var):
        return not _is_critical(node.sign, eps[node.term.name])
    return all(_agrees_with_opposite(c, eps) for c in node.children)


def _transitive_closure(edges: set[tuple[str, str]]) -> frozenset[tuple[str, str]] | None:
    closure = set(edges)
    changed = True
    while changed:
        changed = False
        for a, b in list(closure):
            for c, d in list(closure):
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
    if any(a == b for a, b in closure):
        return None
    return frozenset(closure)


def _tree_pair(ineq: Inequality) -> tuple[SignedNode, SignedNode]:
    return signed_tree(ineq.lhs, MONO), signed_tree(ineq.rhs, ANTI)


def _check_eps(ineq: Inequality, variables: tuple[str, ...], entries: tuple[str, ...],
               require_excellent: bool) -> InductiveWitness | None:
    eps = dict(zip(variables, entries))
    edges: set[tuple[str, str]] = set()
    for tree in _tree_pair(ineq):
        for br in branches(tree):
            if not _is_critical(br.leaf_sign, eps[br.var]):
                continue
            if require_excellent and not br.is_excellent:
                return None
            if not br.is_good:
                return None
            for ob in br.srr_obligations:
                if not _agrees_with_opposite(ob.sibling, eps):
                    return None
                for q in free_vars(ob.sibling.term):
                    edges.add((q, br.var))
    omega = _transitive_closure(edges)
    if omega is None:
        return None
    return InductiveWitness(variables, OrderType(entries), omega)


def _eps_candidates(variables: tuple[str, ...]):
    if len(variables) > MAX_VARIABLES:
        raise ClassifyError(
            f"order-type search is capped at {MAX_VARIABLES} variables, "
            f"got {len(variables)}")
    return product("1d", repeat=len(variables))


def is_sahlqvist(ineq: Inequality) -> OrderType | None:
    """Smallest (lexicographic, 1 before d) Sahlqvist order type, if any."""
    variables = variables_of(ineq)
    for entries in _eps_candidates(variables):
        if _check_eps(ineq, variables, tuple(entries), require_excellent=True):
            return OrderType(tuple(entries))
    return None


def is_inductive(ineq: Inequality) -> InductiveWitness | None:
    """First (lexicographic epsilon, minimal Omega) inductive witness."""
    variables = variables_of(ineq)
    for entries in _eps_candidates(variables):
        w = _check_eps(ineq, variables, tuple(entries), require_excellent=False)
        if w is not None:
            return w
    return None


def inductive_witnesses(ineq: Inequality) -> list[InductiveWitness]:
    """All inductive witnesses, one per workable epsilon, lexicographically."""
    variables = variables_of(ineq)
    out = []
    for entries in _eps_candidates(variables):
        w = _check_eps(ineq, variables, tuple(entries), require_excellent=False)
        if w is not None:
            out.append(w)
    return out


# -- meta-inductive search (anti-substitution) -------------------------

class _Budget:
    def __init__(self, limit: int):
        self.left = limit

    def spend(self, n: int = 1) -> bool:
        self.left -= n
        return self.left >= 0


def match_role(term: Term, reg: RegisteredTerm) -> Term | None:
    """If ``term`` is reg.term with some argument substituted for its
    variable, return that argument; otherwise None."""
    found: list[Term] = []

    def go(pat: Term, t: Term) -> bool:
        if isinstance(pat, Var) and pat.name == reg.var:
            found.append(t)
            return True
        if type(pat) is not type(t):
            return False
        if isinstance(pat, App) and pat.decl != t.decl:  # type: ignore[union-attr]
            return False
        if isinstance(pat, Var):
            return pat == t
        if len(pat.args) != len(t.args):
            return False
        return all(go(pa, ta) for pa, ta in zip(pat.args, t.args))

    if not go(reg.term, term) or not found:
        return None
    first = found[0]
    if any(f != first for f in found[1:]):
        return None
    return first


def _preimages(term: Term, sig: Signature, budget: _Budget) -> list[Term]:
    """Dotted-language preimages of ``term`` under role substitution,
    role matches enumerated before plain structural copies."""
    if not budget.spend():
        return []
    out: list[Term] = []
    seen: set[Term] = set()
    for role in ROLES:
        reg = sig.role(role)
        if reg is None:
            continue
        arg = match_role(term, reg)
        if arg is None or arg == term:  # identity matches make no progress
            continue
        for sub in _preimages(arg, sig, budget):
            cand = DOT_BY_ROLE[role]((sub,))
            if cand not in seen:
                seen.add(cand)
                out.append(cand)
    if not term.args:
        if term not in seen:
            out.append(term)
        return out
    child_lists = [_preimages(a, sig, budget) for a in term.args]
    for combo in product(*child_lists):
        if not budget.spend():
            return out
        cand = term.with_args(tuple(combo))
        if cand not in seen:
            seen.add(cand)
            out.append(cand)
    return out


ANTI_SUBSTITUTION_BUDGET = 10 ** 5


def meta_inductive_witnesses(
    ineq: Inequality, sig: Signature,
    budget: int = ANTI_SUBSTITUTION_BUDGET,
) -> list[tuple[Inequality, InductiveWitness]]:
    """All (dotted preimage, witness) pairs, in deterministic search order."""
    b = _Budget(budget)
    lhs_pre = _preimages(ineq.lhs, sig, b)
    rhs_pre = _preimages(ineq.rhs, sig, b)
    out = []
    for ls in lhs_pre:
        for rs in rhs_pre:
            if not b.spend(10):
                return out
            cand = Inequality(ls, rs)
            w = is_inductive(cand)
            if w is not None:
                out.append((cand, w))
    return out


def is_meta_inductive(
    ineq: Inequality, sig: Signature,
    budget: int = ANTI_SUBSTITUTION_BUDGET,
) -> tuple[Inequality, InductiveWitness] | None:
    found = meta_inductive_witnesses(ineq, sig, budget)
    return found[0] if found else None


# -- reporting ---------------------------------------------------------

def _node_label(node: SignedNode) -> str:
    t = node.term
    sgn = "+" if node.sign == MONO else "-"
    if isinstance(t, App):
        return sgn + t.decl.name
    names = {Meet: "&", Join: "|", DotDia: "dia.", DotBox: "box.",
             DotLhd: "lhd.", DotRhd: "rhd."}
    return sgn + names.get(type(t), type(t).__name__)


def branch_report(ineq: Inequality, eps: OrderType | None = None) -> str:
    """Per-branch P1/P2 split of both signed trees, for the CLI report."""
    variables = variables_of(ineq)
    eps_map = dict(zip(variables, eps.entries)) if eps is not None else None
    lines = []
    for label, tree in zip(("+lhs", "-rhs"), _tree_pair(ineq)):
        for br in branches(tree):
            sgn = "+" if br.leaf_sign == MONO else "-"
            flags = []
            if eps_map is not None:
                flags.append(
                    "critical" if _is_critical(br.leaf_sign, eps_map[br.var])
                    else "noncritical")
            flags.append("excellent" if br.is_excellent
                         else "good" if br.is_good else "not-good")
            p1 = ".".join(_node_label(n) for n in br.p1) or "-"
            p2 = ".".join(_node_label(n) for n in br.p2) or "-"
            lines.append(
                f"  branch {label} {sgn}{br.var}: P1=[{p1}] P2=[{p2}] "
                f"({', '.join(flags)})")
    return "\n".join(lines)
