"""Command-line interface.

Subcommands:
  classify  -- Sahlqvist / inductive / meta-inductive verdicts with
               witnesses and the per-branch skeleton/PIA split
  reduce    -- run the reduction engine (auto strategy or a rule script)
               and emit the derivation trace plus the pure output
  verify    -- reduce, then brute-force check the output against the
               input and every rule step on a sweep of finite lattices
  lemmas    -- run the algebraic lemma suite over a lattice sweep

Exit codes: 0 success / positive verdict; 2 parse error; 3 no positive
classification; 4 reduction failure; 5 quantifier budget exceeded.
Identical inputs and seed produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass

from . import classify, engine, models
from .language import Inequality, Layer, Signature
from .parsing import ParseError, parse_inequality, parse_signature
from .printing import print_inequality

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NO_VERDICT = 3
EXIT_REDUCE_FAILED = 4
EXIT_BUDGET = 5


@dataclass
class RunConfig:
    signature_path: str | None
    command: str
    mode: str = "alba"
    strategy: str = "auto"
    lattice_budget: int = 3
    output_path: str | None = None
    seed: int = 0
    unsafe_budget: bool = False


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dlecorr",
        description="correspondence calculus for distributive lattice expansions")
    p.add_argument("command", choices=["classify", "reduce", "verify", "lemmas"])
    p.add_argument("inequality", nargs="?", default=None,
                   help="inequality text, e.g. 'dia(box(p)) <= box(dia(p))'")
    p.add_argument("--sig", dest="signature_path", default=None,
                   help="signature file (conn/term lines)")
    p.add_argument("--mode", choices=["alba", "albae"], default="alba")
    p.add_argument("--strategy", default="auto",
                   help="'auto' or a rule-script file path")
    p.add_argument("--budget", type=int, default=3,
                   help="poset size cap for lattice sweeps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="output_path", default=None)
    p.add_argument("--unsafe-budget", action="store_true",
                   help="allow poset sizes above 5")
    return p


def _load_signature(cfg: RunConfig) -> Signature:
    if cfg.signature_path is None:
        return Signature(())
    with open(cfg.signature_path, encoding="utf-8") as fh:
        return parse_signature(fh.read())


def _emit(cfg: RunConfig, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _eps_str(variables, eps) -> str:
    return "(" + ",".join(f"{v}:{e}" for v, e in zip(variables, eps.entries)) + ")"


def _omega_str(omega) -> str:
    return "{" + ",".join(f"{a}<{b}" for a, b in sorted(omega)) + "}"


def cmd_classify(cfg: RunConfig, ineq: Inequality, sig: Signature) -> int:
    lines = [f"inequality: {print_inequality(ineq)}"]
    positive = False
    eps = classify.is_sahlqvist(ineq)
    variables = classify.variables_of(ineq)
    if eps is not None:
        lines.append(f"sahlqvist eps={_eps_str(variables, eps)}")
        positive = True
    else:
        lines.append("sahlqvist: no")
    w = classify.is_inductive(ineq)
    if w is not None:
        lines.append(f"inductive eps={_eps_str(w.variables, w.epsilon)} "
                     f"omega={_omega_str(w.omega)}")
        positive = True
    else:
        lines.append("inductive: no")
    meta = classify.is_meta_inductive(ineq, sig)
    if meta is not None:
        pre, mw = meta
        roles = sorted({r for r in ("pi", "sigma", "lambda", "rho")
                        if _uses_role(pre, r)},
                       key=("pi", "sigma", "lambda", "rho").index)
        via = ",".join(roles) if roles else "identity"
        lines.append(
            f"meta-inductive via {via} preimage: {print_inequality(pre)} "
            f"eps={_eps_str(mw.variables, mw.epsilon)} omega={_omega_str(mw.omega)}")
        positive = True
    else:
        lines.append("meta-inductive: no")
    lines.append("branches:")
    lines.append(classify.branch_report(ineq, eps if eps is not None else
                                        (w.epsilon if w is not None else None)))
    _emit(cfg, lines)
    return EXIT_OK if positive else EXIT_NO_VERDICT


def _uses_role(ineq: Inequality, role: str) -> bool:
    from .language import DOT_BY_ROLE, subterms
    cls = DOT_BY_ROLE[role]
    return any(type(s) is cls for s in (*subterms(ineq.lhs), *subterms(ineq.rhs)))


def _run_reduction(cfg: RunConfig, ineq: Inequality, sig: Signature) -> engine.Derivation:
    if cfg.strategy == "auto":
        return engine.run_alba(ineq, sig, cfg.mode, "auto")
    with open(cfg.strategy, encoding="utf-8") as fh:
        return engine.run_alba(ineq, sig, cfg.mode, "script", script=fh.read())


def _result_lines(d: engine.Derivation) -> list[str]:
    lines = engine.trace_lines(d)
    if d.status.kind == "success":
        lines.append("pure-output:")
        for system in d.status.pure_systems:
            body = " ;; ".join(
                print_inequality(si.ineq) + (" [side]" if si.side else "")
                for si in system.ineqs)
            goal = print_inequality(system.goal) if system.goal else "-"
            lines.append(f"  {body} |- {goal}")
        lines.append(f"safe: {engine.is_safe(d)}")
    return lines


def cmd_reduce(cfg: RunConfig, ineq: Inequality, sig: Signature) -> int:
    d = _run_reduction(cfg, ineq, sig)
    _emit(cfg, _result_lines(d))
    return EXIT_OK if d.status.kind == "success" else EXIT_REDUCE_FAILED


def _sweep_lattices(cfg: RunConfig, sig: Signature) -> list[models.FiniteDLE]:
    """Deterministic lattice sample: relational sweeps on small posets for
    unary type-(1) connectives, plus seeded random normal tables."""
    cap = cfg.lattice_budget
    if cap > 5 and not cfg.unsafe_budget:
        raise models.ModelError("budget above 5 requires --unsafe-budget")
    out: list[models.FiniteDLE] = []
    relational = [d for d in sig.connectives
                  if d.arity == 1 and d.order_type[0] == "1"]
    if relational and len(relational) == len(sig.connectives):
        for n in range(1, min(cap, 3) + 1):
            for poset in models.enumerate_posets(n, up_to_iso=True):
                for _, dle in models.relational_lattices(
                        sig, poset, tuple(d.name for d in relational)):
                    out.append(dle)
    rng = random.Random(cfg.seed)
    for _ in range(20):
        out.append(models.random_dle(rng, sig, max_points=min(cap, 4)))
    return out


def cmd_verify(cfg: RunConfig, ineq: Inequality, sig: Signature) -> int:
    d = _run_reduction(cfg, ineq, sig)
    if d.status.kind != "success":
        _emit(cfg, _result_lines(d))
        return EXIT_REDUCE_FAILED
    lines = _result_lines(d)
    lattices = _sweep_lattices(cfg, sig)
    report = models.verify_correspondence(ineq, d, lattices)
    lines.append(f"correspondence: lattices={report.lattices} "
                 f"skipped={report.skipped} divergences={len(report.divergences)}")
    for dle, left, right in report.divergences[:5]:
        lines.append(f"  divergence on {dle.poset.n}-point poset: "
                     f"input={left} output={right}")
    steps_bad = 0
    steps_total = 0
    for node in d.nodes:
        if not node.children:
            continue
        children = [d.node_system_concrete(c) for c in node.children]
        rule = d.node(node.children[0]).rule
        if rule is None or d.node(node.children[0]).system.goal is None:
            continue
        parent_sys = d.node_system_concrete(node.id)
        if parent_sys.goal is None:
            continue
        for dle in lattices[:25]:
            if d.mode == "albae" and not models.role_axioms_hold(dle):
                continue
            steps_total += 1
            if not models.verify_rule_step(parent_sys, children, dle):
                steps_bad += 1
                lines.append(f"  unsound step: {rule.label()} on "
                             f"{dle.poset.n}-point poset")
    lines.append(f"rule-steps: checked={steps_total} unsound={steps_bad}")
    _emit(cfg, lines)
    return EXIT_OK if report.agree and steps_bad == 0 else EXIT_REDUCE_FAILED


def cmd_lemmas(cfg: RunConfig, sig: Signature) -> int:
    lines = []
    bad = 0
    total = 0
    rng = random.Random(cfg.seed)
    for dle in _sweep_lattices(cfg, sig):
        if not dle.sig.registered:
            continue
        report = models.check_lemma_suite(dle, rng)
        total += 1
        if not report.ok:
            bad += 1
            for role, res in report.role_results.items():
                fails = [k for k, v in res.items() if not v]
                if fails:
                    lines.append(f"lattice {total}: role {role} fails {fails}")
    lines.append(f"lemma-suite: lattices={total} failures={bad}")
    _emit(cfg, lines)
    return EXIT_OK if bad == 0 else EXIT_REDUCE_FAILED


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = RunConfig(
        signature_path=args.signature_path, command=args.command,
        mode=args.mode, strategy=args.strategy, lattice_budget=args.budget,
        output_path=args.output_path, seed=args.seed,
        unsafe_budget=args.unsafe_budget)
    try:
        sig = _load_signature(cfg)
        if cfg.command == "lemmas":
            return cmd_lemmas(cfg, sig)
        if args.inequality is None:
            print("error: this command needs an inequality", file=sys.stderr)
            return EXIT_PARSE
        # script replays may start from expanded-language inequalities;
        # classification and auto reduction take base/dotted inputs
        layer = Layer.DLEPP if cfg.strategy != "auto" else Layer.DLESTAR
        ineq = parse_inequality(args.inequality, sig, layer)
        if cfg.command == "classify":
            return cmd_classify(cfg, ineq, sig)
        if cfg.command == "reduce":
            return cmd_reduce(cfg, ineq, sig)
        return cmd_verify(cfg, ineq, sig)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except models.BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (classify.ClassifyError, engine.EngineError, models.ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REDUCE_FAILED


if __name__ == "__main__":
    sys.exit(main())
