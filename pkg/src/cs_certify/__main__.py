"""Command line for cs-certify.

Exit codes: 0 verified, 1 rejected, 2 unsupported hypothesis or bad usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

import numpy as np

from cs_certify.errors import CertifyError, HypothesisError

logger = logging.getLogger("cs_certify")

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_UNSUPPORTED = 2

DEFAULT_T_MAX = 4


def _setup_logging(verbose: bool, log_file: str | None) -> None:
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode="w", encoding="utf-8"))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )


def _emit(data: dict) -> None:
    print(json.dumps(data, indent=1, ensure_ascii=False))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _attach_spotchecks(report, args) -> None:
    if args.spotchecks:
        from cs_certify.theorems.spotchecks import numeric_spotchecks

        report.spotchecks = numeric_spotchecks(report, seed=args.seed, trials=args.trials)


def _finish_report(report, out: Path) -> int:
    from cs_certify.export.codec import encode_report, write_json

    write_json(encode_report(report), out)
    summary = encode_report(report, with_certificate=False).model_dump()
    _emit(summary)
    return EXIT_OK if report.ok else EXIT_REJECTED


def cmd_prove_baby(args) -> int:
    from cs_certify.theorems.baby import prove_baby

    report = prove_baby(args.a, args.p)
    _attach_spotchecks(report, args)
    return _finish_report(report, Path(args.out))


def cmd_prove_main(args) -> int:
    from cs_certify.export.codec import load_datum
    from cs_certify.theorems.main import prove_main

    phi, declared = load_datum(args.datum, args.p)
    report = prove_main(phi, args.index, declared=declared)
    _attach_spotchecks(report, args)
    return _finish_report(report, Path(args.out) / "report.json")


def cmd_check(args) -> int:
    from cs_certify.entailment.replay import replay
    from cs_certify.export.codec import load_certificate

    cert = load_certificate(args.certificate)
    result = replay(cert)
    _emit(
        {
            "ok": result.ok,
            "k": result.k,
            "claimed_k": cert.claimed_k,
            "steps": len(cert.steps),
            "failed_step": result.failed_step,
            "cause": result.cause,
            "gamma": cert.claimed_gamma.to_dict(),
        }
    )
    return EXIT_OK if result.ok else EXIT_REJECTED


def cmd_lambda(args) -> int:
    from cs_certify.data.averages import FunctionTable, lambda_eval
    from cs_certify.export.codec import load_datum

    phi, _ = load_datum(args.datum, args.p)
    rng = np.random.default_rng(args.seed)
    values = []
    for _ in range(args.trials):
        tables = {
            i: FunctionTable.random(phi.p, phi.w_dim(i), args.n, rng) for i in phi.labels
        }
        values.append(abs(lambda_eval(phi, tables, args.n)))
    _emit(
        {
            "p": phi.p,
            "n": args.n,
            "trials": args.trials,
            "max": max(values, default=0.0),
            "mean": float(np.mean(values)) if values else 0.0,
        }
    )
    return EXIT_OK


def _tensor_json(tensor, phi) -> dict:
    from cs_certify.diagrams.labels import fmt

    return {
        "degree": tensor.degree,
        "member": tensor.member,
        "mode": tensor.mode.value,
        "coefficients": {fmt(j): c for j, c in tensor.coefficients.items()},
        "dual": tensor.dual,
        "verified": tensor.verify(phi),
    }


def _cs_json(cs, phi) -> dict | None:
    from cs_certify.diagrams.labels import fmt
    from cs_certify.export.codec import encode_matrix

    if cs is None:
        return None
    return {
        "s": cs.s,
        "partition": [[fmt(j) for j in part] for part in cs.partition],
        "mu": [encode_matrix(m).model_dump() for m in cs.mu],
        "verified": cs.verify(phi),
    }


def cmd_witness(args) -> int:
    from cs_certify.complexity.cs import cs_complexity
    from cs_certify.complexity.true import degree_witness
    from cs_certify.diagrams.labels import as_label, fmt
    from cs_certify.export.codec import load_datum

    phi, _ = load_datum(args.datum, args.p)
    i = as_label(args.index)
    tensor = degree_witness(phi, i, args.degree)
    cs = cs_complexity(phi, i, args.degree)
    _emit(
        {
            "index": fmt(i),
            "degree": args.degree,
            "tensor": _tensor_json(tensor, phi),
            "cs": _cs_json(cs, phi),
        }
    )
    return EXIT_OK


def _complexity_table(phi, t_max: int | None) -> dict:
    from cs_certify.complexity.cs import cs_complexity
    from cs_certify.complexity.true import true_complexity
    from cs_certify.diagrams.labels import fmt

    rows = {}
    for i in phi.labels:
        witness = cs_complexity(phi, i, t_max)
        s_cs = None if witness is None else witness.s
        scan = s_cs if s_cs is not None else (DEFAULT_T_MAX if t_max is None else t_max)
        rows[fmt(i)] = {"s_cs": s_cs, "s": true_complexity(phi, i, scan).s}
    return {
        "indices": rows,
        "s_cs": max((r["s_cs"] for r in rows.values() if r["s_cs"] is not None), default=0),
        "s": max((r["s"] for r in rows.values()), default=0),
    }


def cmd_complexity(args) -> int:
    """The all-index table, or one index in one mode with its witnesses."""
    from cs_certify.complexity.cs import cs_complexity
    from cs_certify.complexity.true import true_complexity
    from cs_certify.diagrams.labels import as_label, fmt
    from cs_certify.export.codec import load_datum

    phi, _ = load_datum(args.datum, args.p)
    if args.index is None:
        _emit(_complexity_table(phi, args.max))
        return EXIT_OK

    i = as_label(args.index)
    out: dict = {"index": fmt(i), "mode": args.mode, "max": args.max}
    if args.mode == "cs":
        witness = cs_complexity(phi, i, args.max)
        out["s"] = None if witness is None else witness.s
        out["witness"] = _cs_json(witness, phi)
    else:
        t_max = args.max
        if t_max is None:
            witness = cs_complexity(phi, i)
            t_max = DEFAULT_T_MAX if witness is None else witness.s
        result = true_complexity(phi, i, t_max)
        out["max"] = t_max
        out["s"] = result.s
        out["membership"] = result.membership
        out["witness"] = _tensor_json(result.witness, phi)
        out["certificate"] = (
            None if result.certificate is None else _tensor_json(result.certificate, phi)
        )
    _emit(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cs-certify", description="Build and check Cauchy-Schwarz certificates over F_p."
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Log at DEBUG level")
    parser.add_argument("--log-file", help="Also write the log to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    def numeric(p: argparse.ArgumentParser) -> None:
        p.add_argument("--spotchecks", action="store_true", help="Run numeric spot checks")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=100)

    baby = sub.add_parser("prove-baby", help="U^3 |= Psi(a)")
    baby.add_argument("--a", type=int, required=True)
    baby.add_argument("--p", type=int, required=True)
    baby.add_argument("--out", required=True, help="Report file with the certificate")
    numeric(baby)
    baby.set_defaults(func=cmd_prove_baby)

    main_ = sub.add_parser("prove-main", help="Phi |= gc at the true complexity of an index")
    main_.add_argument("--datum", required=True)
    main_.add_argument("--index", required=True)
    main_.add_argument("--p", type=int)
    main_.add_argument("--out", required=True, help="Output directory")
    numeric(main_)
    main_.set_defaults(func=cmd_prove_main)

    check = sub.add_parser("check", help="Replay a certificate or a report")
    check.add_argument("certificate")
    check.set_defaults(func=cmd_check)

    lam = sub.add_parser("lambda", help="|Lambda| on random 1-bounded tables")
    lam.add_argument("--datum", required=True)
    lam.add_argument("--p", type=int)
    lam.add_argument("--n", type=int, default=1)
    lam.add_argument("--seed", type=int, default=0)
    lam.add_argument("--trials", type=int, default=10)
    lam.set_defaults(func=cmd_lambda)

    wit = sub.add_parser("witness", help="CS and tensor witnesses at one degree")
    wit.add_argument("--datum", required=True)
    wit.add_argument("--index", required=True)
    wit.add_argument("--degree", type=int, required=True)
    wit.add_argument("--p", type=int)
    wit.set_defaults(func=cmd_witness)

    cx = sub.add_parser("complexity", help="CS and true complexity, per index or for all")
    cx.add_argument("--datum", required=True)
    cx.add_argument("--p", type=int)
    cx.add_argument("--index", help="One index; omit for the table over every index")
    cx.add_argument("--mode", choices=["cs", "true"], default="true")
    cx.add_argument("--max", type=int, help="Largest degree searched or scanned")
    cx.set_defaults(func=cmd_complexity)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose, args.log_file)
    try:
        return args.func(args)
    except HypothesisError as exc:
        logger.error("Unsupported: %s", exc)
        return EXIT_UNSUPPORTED
    except CertifyError as exc:
        logger.error("Rejected: %s", exc)
        return EXIT_REJECTED
    except Exception:
        logger.critical("Fatal error:\n%s", traceback.format_exc())
        raise


if __name__ == "__main__":
    sys.exit(main())
