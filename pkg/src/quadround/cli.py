"""Command-line front end: instance generation, rounding runs, bound
verification suites, and CSV reports.

Subcommands
    gen     write a random instance file (SPD forms, optional witness)
    round   precondition, solve the relaxation, round, write a result file
    verify  run a named verification suite (constants, lemma21, lemma51,
            sandwich), print one row per checked bound
    report  aggregate result files into a fixed-column CSV

Exit codes: 0 ok, 2 parse/usage error, 3 invalid instance (forms fail the
positive definiteness gate), 4 rounding budget exhausted without an accepted
draw, 5 a verification suite found a violated bound.

Seeds are mandatory; there is no wall-clock default. Re-running a command
with identical inputs and seed reproduces the output file byte for byte
except for the timings field, which is excluded from the result digest.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from ._util import canonical_json, sha256_hex
from .bounds import BETA_RANK_ONE, rank_m_beta
from .config import DEFAULTS
from .instances import random_map, random_witness
from .linalg import NotPositiveDefinite
from .quadmap import (InstanceFormatError, QuadraticMap,
                      hull_point_from_combination, hull_point_from_witness,
                      instance_to_json, load_instance, precondition)
from .rounding import GaussianSampler, round_rank_m, round_rank_one
from .verify import SUITES

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID_INSTANCE = 3
EXIT_BUDGET_EXHAUSTED = 4
EXIT_BOUND_VIOLATED = 5

REPORT_COLUMNS = ("n", "k", "m", "kl", "bound", "margin", "fw_gap",
                  "samples_drawn", "accepted")


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def result_digest(doc: dict) -> str:
    """Content hash of a result document, excluding timings and the digest."""
    trimmed = {k: v for k, v in doc.items() if k not in ("timings", "result_digest")}
    return sha256_hex(canonical_json(trimmed))


def cmd_gen(args) -> int:
    sampler = GaussianSampler(args.seed)
    qmap = random_map(sampler, args.n, args.k, args.condition_cap)
    witness = None
    if args.witness_random:
        witness = random_witness(sampler.substream(args.k), qmap)
    doc = instance_to_json(qmap, witness=witness)
    out = Path(args.out)
    out.write_text(_dump_json(doc), encoding="utf-8")
    if not args.quiet:
        print(f"wrote instance n={args.n} k={args.k} "
              f"witness={'X' if witness is not None else 'none'} -> {out}")
    return EXIT_OK


def run_round(qmap: QuadraticMap, witness_spec, seed: int, budget: int,
              tol: float, m: int | None, threads: int = 1,
              witness_random: bool = False):
    """The round pipeline on an already-loaded instance.

    Returns (outcome, payload) where payload carries everything the result
    file needs except the instance digest and command line.
    """
    sampler = GaussianSampler(seed)
    if witness_spec is None:
        if not witness_random:
            raise InstanceFormatError(
                "instance has no witness; add one to the file or pass "
                "--witness-random")
        witness_spec = ("X", random_witness(sampler, qmap))

    t0 = time.perf_counter()
    prec = precondition(qmap)
    if witness_spec[0] == "X":
        X_hat = prec.push_witness(witness_spec[1])
        a = hull_point_from_witness(prec.hat, X_hat)
    else:
        _tag, pts, weights = witness_spec
        pushed = [prec.push_point(p) for p in pts]
        a, X_hat = hull_point_from_combination(prec.hat, pushed, weights)
    t_setup = time.perf_counter() - t0

    t0 = time.perf_counter()
    if m is None:
        outcome = round_rank_one(prec.hat, a, X_hat, sampler,
                                 budget=budget, tol=tol, threads=threads)
        bound = BETA_RANK_ONE
    else:
        outcome = round_rank_m(prec.hat, a, X_hat, m, sampler,
                               budget=budget, tol=tol, threads=threads)
        bound = rank_m_beta(m)
    t_round = time.perf_counter() - t0

    # Certificate points mapped back to the original coordinates; the map
    # evaluated there reproduces b up to the congruence roundoff.
    original_points = np.array([prec.pull_point(p) for p in outcome.points])
    payload = {
        "seed": seed,
        "n": qmap.n,
        "k": qmap.k,
        "m": m,
        "a": a.values.tolist(),
        "b": outcome.b.values.tolist(),
        "kl": outcome.kl,
        "bound": bound,
        "fw_gap": outcome.sdp.fw_gap,
        "sdp_value": outcome.sdp.value,
        "sdp_iterations": outcome.sdp.iterations,
        "sdp_converged": outcome.sdp.converged,
        "samples_drawn": outcome.samples_drawn,
        "accepted": outcome.accepted,
        "accepted_count": outcome.accepted_count,
        "draws": outcome.draws,
        "points": original_points.tolist(),
        "weights": ([1.0] if m is None
                    else [1.0 / m] * m),
        "timings": {"setup_s": t_setup, "round_s": t_round},
    }
    return outcome, payload


def cmd_round(args) -> int:
    if (args.rank_m is None) == (not args.rank_one):
        print("error: exactly one of --rank-one / --rank-m M is required",
              file=sys.stderr)
        return EXIT_PARSE
    instance_path = Path(args.instance)
    raw = instance_path.read_bytes()
    qmap, witness_spec = load_instance(str(instance_path))

    outcome, payload = run_round(
        qmap, witness_spec, seed=args.seed, budget=args.budget, tol=args.tol,
        m=args.rank_m, threads=args.threads,
        witness_random=args.witness_random)

    command = f"round {'--rank-one' if args.rank_m is None else f'--rank-m {args.rank_m}'} " \
              f"--budget {args.budget} --seed {args.seed} --tol {args.tol!r}"
    doc = {"instance_digest": sha256_hex(raw.decode("utf-8")),
           "command": command, **payload}
    doc["result_digest"] = result_digest(doc)

    out = Path(args.out) if args.out else instance_path.with_suffix(".result.json")
    out.write_text(_dump_json(doc), encoding="utf-8")

    if not args.quiet:
        kind = "rank-one" if args.rank_m is None else f"rank-m (m={args.rank_m})"
        print(f"{kind} rounding of {instance_path.name} "
              f"(digest {doc['instance_digest'][:12]})")
        print(f"  kl = {outcome.kl:.6g}  vs bound {payload['bound']:.6g} "
              f"+ fw_gap {payload['fw_gap']:.3g}  "
              f"margin = {payload['bound'] - outcome.kl:.6g}")
        print(f"  accepted = {outcome.accepted} "
              f"({outcome.accepted_count}/{outcome.draws} draws), "
              f"samples_drawn = {outcome.samples_drawn}, "
              f"sdp iters = {payload['sdp_iterations']}")
        print(f"  result written: {out}")
    return EXIT_OK if outcome.accepted else EXIT_BUDGET_EXHAUSTED


def cmd_verify(args) -> int:
    suite_fn = SUITES.get(args.suite)
    if suite_fn is None:
        print(f"error: unknown suite {args.suite!r}", file=sys.stderr)
        return EXIT_PARSE
    if args.suite == "constants":
        rows, extras = suite_fn()
    elif args.suite == "sandwich":
        rows, extras = suite_fn(args.seed, threads=args.threads)
    else:
        rows, extras = suite_fn(args.seed, samples=args.samples,
                                threads=args.threads)
    passed = all(r.satisfied for r in rows)
    if not args.quiet:
        width = max(len(r.name) for r in rows)
        for r in rows:
            flag = "ok " if r.satisfied else "FAIL"
            print(f"{flag} {r.name:<{width}} value={r.value:.10g} "
                  f"{r.relation} target={r.paper_value:.10g}")
        for key, val in extras.items():
            print(f"--- {key} = {val:.10g}")
        print(f"suite {args.suite}: {'PASS' if passed else 'FAIL'} "
              f"({sum(r.satisfied for r in rows)}/{len(rows)} checks)")
    if args.json:
        doc = {
            "suite": args.suite,
            "seed": args.seed,
            "samples": args.samples,
            "passed": passed,
            "rows": [{"name": r.name, "value": r.value,
                      "paper_value": r.paper_value, "relation": r.relation,
                      "satisfied": r.satisfied} for r in rows],
            "extras": extras,
        }
        Path(args.json).write_text(_dump_json(doc), encoding="utf-8")
    return EXIT_OK if passed else EXIT_BOUND_VIOLATED


def _report_rows(paths, accepted_only: bool):
    rows = []
    for path in paths:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            if accepted_only and not doc["accepted"]:
                continue
            kl = float(doc["kl"])
            bound = float(doc["bound"])
            rows.append({
                "n": doc["n"], "k": doc["k"],
                "m": "" if doc.get("m") is None else doc["m"],
                "kl": repr(kl), "bound": repr(bound),
                "margin": repr(bound - kl),
                "fw_gap": repr(float(doc["fw_gap"])),
                "samples_drawn": doc["samples_drawn"],
                "accepted": doc["accepted"],
                "_sort": (doc.get("m") or 0, doc["instance_digest"]),
            })
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
            raise InstanceFormatError(f"malformed result file {path}: {exc}")
    rows.sort(key=lambda r: r["_sort"])
    return rows


def cmd_report(args) -> int:
    rows = _report_rows(args.results, args.accepted_only)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in rows:
        writer.writerow([r[c] for c in REPORT_COLUMNS])
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if not args.quiet:
            print(f"wrote {len(rows)} rows -> {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadround",
        description="Entropic relaxation and randomized rounding for images "
                    "of positive definite quadratic maps.")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for draws and Monte Carlo "
                             "(results are identical for any value)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress human-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--condition-cap", type=float, default=100.0)
    p.add_argument("--witness-random", action="store_true",
                   help="attach a normalized Wishart witness")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("round", help="run the full rounding pipeline")
    p.add_argument("instance")
    p.add_argument("--rank-one", action="store_true")
    p.add_argument("--rank-m", type=int, default=None, metavar="M")
    p.add_argument("--budget", type=int, default=None,
                   help="draws (rank-one) or batches (rank-m); defaults "
                        f"{DEFAULTS.rank_one_budget} / {DEFAULTS.rank_m_budget}")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=float, default=DEFAULTS.fw_gap)
    p.add_argument("--witness-random", action="store_true",
                   help="draw a witness when the instance has none")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_round)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True,
                   choices=sorted(SUITES.keys()))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", type=lambda s: int(float(s)),
                   default=10 ** 6, help="Monte Carlo samples per estimate")
    p.add_argument("--json", default=None, help="also write rows as JSON")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("report", help="aggregate result files into CSV")
    p.add_argument("results", nargs="+")
    p.add_argument("--out", default=None)
    p.add_argument("--accepted-only", action="store_true",
                   help="drop results whose budget was exhausted")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; keep that contract.
        return int(exc.code or 0)
    if args.command == "round" and args.budget is None:
        args.budget = (DEFAULTS.rank_one_budget if args.rank_m is None
                       else DEFAULTS.rank_m_budget)
    try:
        return args.fn(args)
    except (InstanceFormatError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NotPositiveDefinite as exc:
        print(f"error: invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID_INSTANCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INSTANCE


if __name__ == "__main__":
    sys.exit(main())
