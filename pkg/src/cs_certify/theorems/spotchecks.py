"""Brute-force numeric checks of the inequalities the certificates stand for.

Every check draws random unit-modulus tables from a seeded generator and
records the worst margin (right-hand side minus left-hand side) seen.
"""

from __future__ import annotations

import logging

import numpy as np

from cs_certify.config import get_config
from cs_certify.data.averages import FunctionTable, gowers_norm, lambda_eval
from cs_certify.data.standard import arithmetic_progression, gc
from cs_certify.diagrams.labels import TRIANGLE
from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.transport import semantic_transport
from cs_certify.errors import CapExceededError, ParameterError
from cs_certify.theorems.report import PipelineReport, SpotCheck

logger = logging.getLogger(__name__)


def _result(name: str, trials: int, margins: list[float], detail: str = "") -> SpotCheck:
    worst = min(margins) if margins else 0.0
    ok = worst >= -get_config().tolerance
    if not ok:
        logger.error("Spot check %s violated by %.3g", name, -worst)
    return SpotCheck(name=name, trials=trials, ok=ok, worst_margin=worst, detail=detail)


# ---------------------------------------------------------------------------
# Single inequalities
# ---------------------------------------------------------------------------


def progression_margin(f1: FunctionTable, f2: FunctionTable, f3: FunctionTable) -> float:
    """||f1||_{U^2} - |E f1(y) f2(y+h) f3(y+2h)|."""
    ap = arithmetic_progression(f1.p, 3)
    tables = {("1",): f1, ("2",): f2, ("3",): f3}
    return gowers_norm(f1, 2) - abs(lambda_eval(ap, tables, f1.n))


def gc_margin(s: int, f_triangle: FunctionTable, others: list[FunctionTable]) -> float:
    """||f_△||_{U^{s+1}} - |Lambda_{gc_s}(f)|; the other tables live on W^s."""
    if len(others) != s + 1:
        raise ParameterError(f"gc_{s} has {s + 1} other indices, got {len(others)} tables")
    datum = gc(f_triangle.p, s, f_triangle.w_dim)
    tables = {(str(r + 1),): f for r, f in enumerate(others)}
    tables[(TRIANGLE,)] = f_triangle
    return gowers_norm(f_triangle, s + 1) - abs(lambda_eval(datum, tables, f_triangle.n))


def bilinear_average(f: FunctionTable, a: int) -> complex:
    """E_{h,h'} b(a h, h') conj(b(h, a h')) on F_p, where
    b(h, h') = E_x f(x) conj(f(x+h)) conj(f(x+h')) f(x+h+h')."""
    if f.w_dim != 1 or f.n != 1:
        raise ParameterError("the bilinear average is tabulated on F_p only")
    p = f.p
    v = f.values
    x = np.arange(p)
    h = x[:, None, None]
    k = x[None, :, None]
    xs = x[None, None, :]
    b = (v[xs] * np.conj(v[(xs + h) % p]) * np.conj(v[(xs + k) % p]) * v[(xs + h + k) % p]).mean(
        axis=2
    )
    left = b[(a * x[:, None]) % p, x[None, :]]
    right = b[x[:, None], (a * x[None, :]) % p]
    return complex((left * np.conj(right)).mean())


def bilinear_margin(f: FunctionTable, a: int, m: int) -> float:
    """Re E b(ah, h') conj b(h, ah') - (||f||_{U^3}^8)^(2^m)."""
    delta = gowers_norm(f, 3) ** 8
    return bilinear_average(f, a).real - delta ** (2**m)


# ---------------------------------------------------------------------------
# Batteries
# ---------------------------------------------------------------------------


def check_progression(p: int, trials: int = 100, seed: int = 0) -> SpotCheck:
    rng = np.random.default_rng(seed)
    margins = [
        progression_margin(*(FunctionTable.random(p, 1, 1, rng) for _ in range(3)))
        for _ in range(trials)
    ]
    return _result("progression by U2", trials, margins)


def check_gc_bound(p: int, s: int, trials: int = 100, seed: int = 0) -> SpotCheck:
    rng = np.random.default_rng(seed)
    margins = []
    for _ in range(trials):
        triangle = FunctionTable.random(p, 1, 1, rng)
        others = [FunctionTable.random(p, s, 1, rng) for _ in range(s + 1)]
        margins.append(gc_margin(s, triangle, others))
    return _result(f"gc_{s} by U{s + 1}", trials, margins)


def check_bilinear(p: int, a: int, m: int, trials: int = 100, seed: int = 0) -> SpotCheck:
    rng = np.random.default_rng(seed)
    margins = [bilinear_margin(FunctionTable.random(p, 1, 1, rng), a, m) for _ in range(trials)]
    margins.append(bilinear_margin(FunctionTable.constant(p, 1, 1), a, m))
    return _result(f"bilinear a={a}", trials + 1, margins)


def check_transport(
    cert: EntailmentCertificate, trials: int = 100, seed: int = 0, n: int = 1
) -> SpotCheck:
    """Numeric replay on random tables; skipped when an average exceeds the caps."""
    margins = []
    for t in range(trials):
        try:
            result = semantic_transport(cert, n=n, seed=seed + t)
        except CapExceededError as exc:
            logger.info("Transport check skipped: %s", exc)
            return _result("transport", 0, [], detail=f"skipped: {exc}")
        margins.append(0.0 if result.ok else -1.0)
    return _result("transport", trials, margins)


def numeric_spotchecks(
    report: PipelineReport, n: int = 1, seed: int = 0, trials: int = 100
) -> list[SpotCheck]:
    """The inequalities behind a pipeline report, on random 1-bounded tables."""
    p = report.p
    checks = [check_progression(p, trials, seed)]
    if report.theorem == "baby":
        a = int(report.parameters["a"])
        checks.append(check_bilinear(p, a, report.k, trials, seed))
    else:
        s = int(report.parameters["s"])
        if s >= 1:
            checks.append(check_gc_bound(p, s, trials, seed))
    checks.append(check_transport(report.certificate, trials, seed, n))
    failed = [c.name for c in checks if not c.ok]
    if failed:
        logger.error("Spot checks failed: %s", ", ".join(failed))
    else:
        logger.info("%d spot checks hold", len(checks))
    return checks
