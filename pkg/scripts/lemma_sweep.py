"""Standalone algebraic lemma sweep.

Runs the defined-modality lemma suite over relational lattices (all
posets up to iso on <= 3 points, all relations up to automorphism, one
relation interpreting both unary connectives) and prints a per-lattice
summary plus the additivity statistics for the registered diamond-role
term.

    python scripts/lemma_sweep.py [signature-file] [--seed N]
"""

from __future__ import annotations

import argparse
import pathlib
import random
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from dlecorr import models  # noqa: E402
from dlecorr.parsing import parse_signature  # noqa: E402

DEFAULT_SIG = pathlib.Path(__file__).resolve().parents[1] / "tests" / "golden" / "classical.sig"


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("signature", nargs="?", default=str(DEFAULT_SIG))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sig = parse_signature(pathlib.Path(args.signature).read_text())
    rng = random.Random(args.seed)

    total = failures = additive = 0
    for n in (1, 2, 3):
        for poset in models.enumerate_posets(n, up_to_iso=True):
            for rel in models.canonical_relations(poset):
                dle = models.FiniteDLE(poset, sig)
                for decl in sig.connectives:
                    if decl.arity == 1 and decl.order_type[0] == "1":
                        dle.add_op(decl.name, rel, validate=False)
                if len(dle.ops) != len(sig.connectives):
                    continue
                total += 1
                report = models.check_lemma_suite(dle, rng)
                if not report.ok:
                    failures += 1
                    print(f"FAIL on {n}-point poset, relation {rel.pairs()}:")
                    for role, res in report.role_results.items():
                        bad = [k for k, v in res.items() if not v]
                        if bad:
                            print(f"  {role}: {bad}")
                if sig.role("pi") is not None:
                    f = dle.role_table("pi")
                    if all(dle.leq(f[dle.join(a, b)], dle.join(f[a], f[b]))
                           for a in range(dle.n_elem)
                           for b in range(dle.n_elem)):
                        additive += 1
    print(f"lattices: {total}  suite failures: {failures}  "
          f"additive diamond-role instances: {additive}")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
