import pathlib
import subprocess
import sys

GOLDEN = pathlib.Path(__file__).parent / "golden"
SIG = GOLDEN / "classical.sig"


def run_cli(args, out=None):
    argv = [sys.executable, "-m", "dlecorr.cli"] + args
    if out is not None:
        argv += ["--out", str(out)]
    return subprocess.run(argv, capture_output=True, text=True)


def test_classify_sahlqvist_exit_zero():
    r = run_cli(["classify", "dia(box(p)) <= box(dia(p))", "--sig", str(SIG)])
    assert r.returncode == 0
    assert "sahlqvist eps=(p:1)" in r.stdout


def test_classify_meta_inductive_verdict():
    r = run_cli(["classify", "dia(box(dia(box(p)))) <= box(dia(box(dia(p))))",
                 "--sig", str(SIG)])
    assert r.returncode == 0
    assert "sahlqvist: no" in r.stdout
    assert "inductive: no" in r.stdout
    assert "meta-inductive via pi,sigma" in r.stdout


def test_classify_variable_free_is_positive():
    r = run_cli(["classify", "top <= bot", "--sig", str(SIG)])
    assert r.returncode == 0
    assert "inductive eps=()" in r.stdout


def test_classify_negative_verdict_exit_three(tmp_path):
    sig = tmp_path / "bare.sig"
    sig.write_text("conn dia F 1 (1)\nconn box G 1 (1)\n")
    r = run_cli(["classify", "dia(box(dia(box(p)))) <= box(dia(box(dia(p))))",
                 "--sig", str(sig)])
    assert r.returncode == 3


def test_parse_error_exit_two():
    r = run_cli(["classify", "dia(box(p) <= box(dia(p))", "--sig", str(SIG)])
    assert r.returncode == 2
    assert "position" in r.stderr


def test_reduce_matches_golden_trace(tmp_path):
    cases = [
        ("churchrosser.trace", "dia(box(p)) <= box(dia(p))", "alba", None),
        ("additivity.trace",
         "dia(box(dia(p | q))) <= dia(box(dia(p))) | dia(box(dia(q)))",
         "albae", None),
        ("geach.trace", "dia(box(dia(box(p)))) <= box(dia(box(dia(p))))",
         "albae", None),
        ("tense.trace", "dia(box(p)) <= box(dia(p))", "alba",
         str(GOLDEN / "tense.script")),
        ("pseudo.trace",
         "dia(box(dia(p))) <= Dia[pi](p) | dia(box(dia(bot)))", "albae",
         str(GOLDEN / "pseudo.script")),
    ]
    for fname, ineq, mode, script in cases:
        out = tmp_path / fname
        args = ["reduce", ineq, "--sig", str(SIG), "--mode", mode]
        if script:
            args += ["--strategy", script]
        r = run_cli(args, out=out)
        assert r.returncode == 0, r.stderr
        assert out.read_bytes() == (GOLDEN / fname).read_bytes(), fname


def test_reduce_failure_exit_four(tmp_path):
    sig = tmp_path / "bare.sig"
    sig.write_text("conn dia F 1 (1)\nconn box G 1 (1)\n")
    r = run_cli(["reduce", "dia(box(dia(box(p)))) <= box(dia(box(dia(p))))",
                 "--sig", str(sig)])
    assert r.returncode == 4
    assert "stuck" in r.stdout


def test_budget_guard():
    r = run_cli(["verify", "p <= p", "--sig", str(SIG), "--budget", "6"])
    assert r.returncode != 0


def test_determinism_same_seed_byte_identical(tmp_path):
    outs = []
    for i in (1, 2):
        out = tmp_path / f"v{i}.txt"
        r = run_cli(["verify", "dia(box(p)) <= box(dia(p))", "--sig", str(SIG),
                     "--budget", "2", "--seed", "11"], out=out)
        assert r.returncode == 0, r.stderr + r.stdout
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_church_rosser_small_budget(tmp_path):
    out = tmp_path / "verify.txt"
    r = run_cli(["verify", "dia(box(p)) <= box(dia(p))", "--sig", str(SIG),
                 "--budget", "2", "--seed", "3"], out=out)
    assert r.returncode == 0, r.stdout
    text = out.read_text()
    assert "divergences=0" in text
    assert "unsound=0" in text


def test_lemmas_command(tmp_path):
    out = tmp_path / "lemmas.txt"
    r = run_cli(["lemmas", "--sig", str(SIG), "--budget", "2", "--seed", "5"],
                out=out)
    assert r.returncode == 0, r.stdout
    assert "failures=0" in out.read_text()


def test_golden_corpus_round_trips():
    # every inequality printed in the golden traces reparses to the same
    # rendering at the expanded layer
    from dlecorr.language import Layer
    from dlecorr.parsing import parse_inequality, parse_signature
    from dlecorr.printing import print_inequality
    sig = parse_signature(SIG.read_text())
    count = 0
    for trace in sorted(GOLDEN.glob("*.trace")):
        for line in trace.read_text().splitlines():
            if "system: " not in line:
                continue
            body = line.split("system: ", 1)[1]
            body = body.split(" |- ")[0]
            for chunk in body.split(" ;; "):
                chunk = chunk.replace(" [side]", "").strip()
                if not chunk or chunk == "-":
                    continue
                ineq = parse_inequality(chunk, sig, Layer.DLEPP)
                assert print_inequality(ineq) == chunk
                count += 1
    assert count > 30
