"""Seeded random generators for property suites.

Random inductive inequalities are built by construction rather than by
rejection: each side is a skeleton section (delta-adjoint and SLR nodes)
grown over PIA sections (SRA chains, SRR nodes whose side terms agree
with the opposite order type and only use dependency-smaller variables),
with every other leaf non-critical for the drawn order type.  The result
is verified with the classifier and regenerated in the rare case the
draw degenerates.

The dotted variants draw the four placeholder modalities as well; their
substitution images (replacing each dotted modality by the registered
term of its role) feed the enhanced-mode suites.
"""

from __future__ import annotations

import random

from . import classify
from .engine import concretize
from .language import (
    ANTI, BOT, MONO, TOP, App, ConnectiveDecl, DotBox, DotDia, DotLhd,
    DotRhd, Inequality, OrderType, Signature, Term, Var, join, meet,
)

VAR_NAMES = ("p", "q", "r")


def random_signature(rng: random.Random, n_conn: int = 2) -> Signature:
    decls = []
    for i in range(n_conn):
        family = rng.choice("FG")
        arity = rng.choice((1, 1, 2))
        eps = OrderType(tuple(rng.choice("1d") for _ in range(arity)))
        name = f"{'f' if family == 'F' else 'g'}{i}"
        decls.append(ConnectiveDecl(name, family, arity, eps))
    return Signature(tuple(decls))


class _Draw:
    def __init__(self, rng: random.Random, sig: Signature, variables: tuple[str, ...],
                 eps: dict[str, str], rank: dict[str, int], star: bool):
        self.rng = rng
        self.sig = sig
        self.variables = variables
        self.eps = eps
        self.rank = rank
        # Dotted modalities drawn: only those whose role has a registered
        # term (so substitution images exist); all four on bare signatures.
        if not star:
            self.dots = frozenset()
        elif sig.registered:
            self.dots = frozenset(reg.role for reg in sig.registered)
        else:
            self.dots = frozenset(("pi", "sigma", "lambda", "rho"))
        self.star = bool(self.dots)

    _DOT_NAME = {"pi": "dot_dia", "sigma": "dot_box",
                 "lambda": "dot_lhd", "rho": "dot_rhd"}

    def _dot_options(self, roles) -> list[str]:
        return [self._DOT_NAME[r] for r in roles if r in self.dots]

    def critical_at(self, sign: int) -> list[str]:
        want = "1" if sign == MONO else "d"
        return [v for v in self.variables if self.eps[v] == want]

    def noncritical_at(self, sign: int, allowed=None) -> list[str]:
        want = "d" if sign == MONO else "1"
        vs = [v for v in self.variables if self.eps[v] == want]
        if allowed is not None:
            vs = [v for v in vs if v in allowed]
        return vs

    # -- non-critical filler (every leaf non-critical at its sign) ------

    def noncrit(self, sign: int, depth: int, allowed=None) -> Term:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.35:
            vs = self.noncritical_at(sign, allowed)
            if vs and rng.random() < 0.7:
                return Var(rng.choice(vs))
            return rng.choice((TOP, BOT))
        options = ["meet", "join"]
        options += [d.name for d in self.sig.connectives]
        options += self._dot_options(("pi", "sigma", "lambda", "rho"))
        pick = rng.choice(options)
        if pick == "meet":
            return meet(self.noncrit(sign, depth - 1, allowed),
                        self.noncrit(sign, depth - 1, allowed))
        if pick == "join":
            return join(self.noncrit(sign, depth - 1, allowed),
                        self.noncrit(sign, depth - 1, allowed))
        if pick == "dot_dia":
            return DotDia((self.noncrit(sign, depth - 1, allowed),))
        if pick == "dot_box":
            return DotBox((self.noncrit(sign, depth - 1, allowed),))
        if pick == "dot_lhd":
            return DotLhd((self.noncrit(-sign, depth - 1, allowed),))
        if pick == "dot_rhd":
            return DotRhd((self.noncrit(-sign, depth - 1, allowed),))
        decl = self.sig.decl(pick)
        args = tuple(self.noncrit(sign * tone, depth - 1, allowed)
                     for tone in decl.tonicities())
        return App(decl, args)

    # -- PIA sections ----------------------------------------------------

    def pia(self, sign: int, depth: int) -> tuple[Term, str] | None:
        """A PIA tree carrying exactly one critical leaf; returns the term
        and the pivot variable."""
        rng = self.rng
        crits = self.critical_at(sign)
        if depth <= 0 or (crits and rng.random() < 0.4):
            if not crits:
                return None
            v = rng.choice(crits)
            return Var(v), v
        options = []
        if sign == MONO:
            options.append("meet_sra")
            for d in self.sig.connectives:
                if d.family == "G" and d.arity >= 1:
                    options.append("app:" + d.name)
            options += self._dot_options(("sigma", "rho"))
        else:
            options.append("join_sra")
            for d in self.sig.connectives:
                if d.family == "F" and d.arity >= 1:
                    options.append("app:" + d.name)
            options += self._dot_options(("pi", "lambda"))
        if not options:
            if not crits:
                return None
            v = rng.choice(crits)
            return Var(v), v
        pick = rng.choice(options)
        if pick == "meet_sra":
            sub = self.pia(sign, depth - 1)
            if sub is None:
                return None
            t, v = sub
            return meet(t, self.noncrit(sign, depth - 1)), v
        if pick == "join_sra":
            sub = self.pia(sign, depth - 1)
            if sub is None:
                return None
            t, v = sub
            return join(t, self.noncrit(sign, depth - 1)), v
        if pick == "dot_box":
            sub = self.pia(sign, depth - 1)
            return None if sub is None else (DotBox((sub[0],)), sub[1])
        if pick == "dot_rhd":
            sub = self.pia(-sign, depth - 1)
            return None if sub is None else (DotRhd((sub[0],)), sub[1])
        if pick == "dot_dia":
            sub = self.pia(sign, depth - 1)
            return None if sub is None else (DotDia((sub[0],)), sub[1])
        if pick == "dot_lhd":
            sub = self.pia(-sign, depth - 1)
            return None if sub is None else (DotLhd((sub[0],)), sub[1])
        decl = self.sig.decl(pick.split(":", 1)[1])
        coord = rng.randrange(decl.arity)
        tone = decl.tonicities()[coord]
        sub = self.pia(sign * tone, depth - 1)
        if sub is None:
            return None
        t, pivot = sub
        # SRR side terms: opposite-order-type agreeing, strictly smaller vars
        allowed = {q for q in self.variables if self.rank[q] < self.rank[pivot]}
        args = []
        for k, tk in enumerate(decl.tonicities()):
            if k == coord:
                args.append(t)
            else:
                args.append(self.noncrit(sign * tk, depth - 1, allowed))
        return App(decl, tuple(args)), pivot

    # -- skeleton sections -------------------------------------------------

    def skel(self, sign: int, depth: int) -> Term | None:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.45:
            sub = self.pia(sign, depth)
            return None if sub is None else sub[0]
        options = ["delta_both", "delta_one"]
        if sign == MONO:
            for d in self.sig.connectives:
                if d.family == "F" and d.arity >= 1:
                    options.append("app:" + d.name)
            options += self._dot_options(("pi", "lambda"))
        else:
            for d in self.sig.connectives:
                if d.family == "G" and d.arity >= 1:
                    options.append("app:" + d.name)
            options += self._dot_options(("sigma", "rho"))
        pick = rng.choice(options)
        if pick == "delta_both":
            lhs = self.skel(sign, depth - 1)
            rhs = self.skel(sign, depth - 1)
            if lhs is None or rhs is None:
                return None
            return join(lhs, rhs) if sign == MONO else meet(lhs, rhs)
        if pick == "delta_one":
            sub = self.skel(sign, depth - 1)
            if sub is None:
                return None
            other = self.noncrit(sign, depth - 1)
            return meet(sub, other) if sign == MONO else join(sub, other)
        if pick == "dot_dia":
            sub = self.skel(sign, depth - 1)
            return None if sub is None else DotDia((sub,))
        if pick == "dot_lhd":
            sub = self.skel(-sign, depth - 1)
            return None if sub is None else DotLhd((sub,))
        if pick == "dot_box":
            sub = self.skel(sign, depth - 1)
            return None if sub is None else DotBox((sub,))
        if pick == "dot_rhd":
            sub = self.skel(-sign, depth - 1)
            return None if sub is None else DotRhd((sub,))
        decl = self.sig.decl(pick.split(":", 1)[1])
        coord = rng.randrange(decl.arity)
        sub = self.skel(sign * decl.tonicities()[coord], depth - 1)
        if sub is None:
            return None
        args = []
        for k, tk in enumerate(decl.tonicities()):
            if k == coord:
                args.append(sub)
            else:
                args.append(self.noncrit(sign * tk, depth - 1))
        return App(decl, tuple(args))


def random_inductive(rng: random.Random, sig: Signature, star: bool = False,
                     max_vars: int = 3, max_depth: int = 5,
                     max_tries: int = 200) -> Inequality:
    """A random inequality verified inductive by the classifier."""
    for _ in range(max_tries):
        nvars = rng.randint(1, max_vars)
        variables = VAR_NAMES[:nvars]
        eps = {v: rng.choice("1d") for v in variables}
        perm = list(variables)
        rng.shuffle(perm)
        rank = {v: i for i, v in enumerate(perm)}
        draw = _Draw(rng, sig, variables, eps, rank, star)
        lhs = draw.skel(MONO, rng.randint(1, max_depth))
        rhs = draw.skel(ANTI, rng.randint(1, max_depth))
        if lhs is None and rhs is None:
            continue
        if lhs is None:
            lhs = draw.noncrit(MONO, 2)
        if rhs is None:
            rhs = draw.noncrit(ANTI, 2)
        ineq = Inequality(lhs, rhs)
        if classify.is_inductive(ineq) is not None:
            return ineq
    raise RuntimeError("could not draw an inductive inequality")


def phi_image(ineq: Inequality, sig: Signature) -> Inequality:
    """Substitution image: dotted modalities replaced by registered terms."""
    return Inequality(concretize(ineq.lhs, sig), concretize(ineq.rhs, sig))
