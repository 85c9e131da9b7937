"""Seeded Monte Carlo experiments over random integer matrices.

Every trial draws its matrix from a stream keyed by
``(seed, n, m, trial_index)``, so results do not depend on how trials are
spread over worker processes. Records are reduced in (shape, trial) order
and serialized with sorted keys, which makes the JSON output byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np
from scipy.stats import beta

from . import __version__
from .distributions import (
    Adversarial,
    SeededSource,
    TruncatedHaar,
    adversarial_primes,
    distribution_from_config,
    distribution_to_config,
    sample,
)
from .exact_linalg import rank_mod_p
from .surjectivity import cokernel, is_surjective_fast
from .theory import (
    FiniteAbelianPGroup,
    padic_surjectivity_probability,
    partitions_up_to,
    wood_mass,
    zeta_product_limit,
)

KINDS = ("surjectivity_rate", "cokernel_census", "adversarial_failure", "padic_rank", "decay_curve")
OVERFLOW = "overflow"
MIN_FAILURES_FOR_FIT = 5


class ConfigError(ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class ShapeRule:
    """How the column count follows from n: fixed m, m = n + u, or m = ceil(ratio * n)."""

    kind: str  # "fixed", "offset" or "ratio"
    value: object

    def cols(self, n: int) -> int:
        if self.kind == "fixed":
            return int(self.value)
        if self.kind == "offset":
            return n + int(self.value)
        return math.ceil(Fraction(self.value) * n)

    @property
    def offset(self) -> Optional[int]:
        return int(self.value) if self.kind == "offset" else None


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    distribution: object
    n_values: tuple
    shape: ShapeRule
    trials: int
    seed: int
    primes: tuple = (2,)
    max_partition: int = 4
    rho_budget: int = 10**4
    delta_zero_rows: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"unknown kind {self.kind!r}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ConfigError("n", "needs at least one positive value")
        if self.shape.kind == "ratio" and Fraction(self.shape.value) <= 1:
            raise ConfigError("ratio", "must exceed 1")
        if self.shape.kind == "offset" and int(self.shape.value) < 0:
            raise ConfigError("u", "must be >= 0")
        for n in self.n_values:
            if self.shape.cols(n) < n:
                raise ConfigError("m", f"shape rule gives m < n at n={n}")
        if self.kind == "padic_rank" and not isinstance(self.distribution, TruncatedHaar):
            raise ConfigError("distribution", "padic_rank needs the haar distribution")
        if self.kind == "adversarial_failure" and not isinstance(self.distribution, Adversarial):
            raise ConfigError("distribution", "adversarial_failure needs the adversarial distribution")
        if self.kind == "decay_curve" and self.shape.kind != "ratio":
            raise ConfigError("delta", "decay_curve needs delta (m = ceil((2+delta) n))")

    def shapes(self) -> list:
        out = [(n, self.shape.cols(n), "") for n in self.n_values]
        if self.delta_zero_rows:
            out += [(n, 2 * n, "delta=0 (outside hypothesis)") for n in self.n_values]
        return out

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "n": list(self.n_values),
            "trials": self.trials,
            "seed": self.seed,
            "rho_budget": self.rho_budget,
        }
        d.update(distribution_to_config(self.distribution))
        if self.shape.kind == "fixed":
            d["m"] = int(self.shape.value)
        elif self.shape.kind == "offset":
            d["u"] = int(self.shape.value)
        elif self.kind == "decay_curve":
            d["delta"] = str(Fraction(self.shape.value) - 2)
        else:
            d["ratio"] = str(Fraction(self.shape.value))
        if self.kind == "cokernel_census":
            d["primes"] = list(self.primes)
            d["max_partition"] = self.max_partition
        if self.kind == "decay_curve":
            d["delta_zero_rows"] = self.delta_zero_rows
        return d


# -- config text format -------------------------------------------------------

_INT_KEYS = {"trials", "seed", "k", "p", "L", "m", "u", "max_partition", "rho_budget"}
_FLOAT_KEYS = {"q"}
_LIST_KEYS = {"n", "primes"}
_KNOWN = _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | {
    "kind", "distribution", "ratio", "delta", "delta_zero_rows",
}
_DIST_KEYS = {"q", "k", "p", "L"}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, lists are comma separated."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN:
            raise ConfigError(key, "unknown key")
        if key in raw:
            raise ConfigError(key, "given twice")
        try:
            if key in _INT_KEYS:
                raw[key] = int(value)
            elif key in _FLOAT_KEYS:
                raw[key] = float(value)
            elif key in _LIST_KEYS:
                raw[key] = tuple(int(v) for v in value.replace(",", " ").split())
            elif key in ("ratio", "delta"):
                raw[key] = Fraction(value)
            elif key == "delta_zero_rows":
                if value.lower() not in ("true", "false"):
                    raise ValueError(value)
                raw[key] = value.lower() == "true"
            else:
                raw[key] = value
        except ValueError:
            raise ConfigError(key, f"invalid value {value!r}") from None
    return raw


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    for key in ("kind", "distribution", "n", "trials", "seed"):
        if key not in raw:
            raise ConfigError(key, "missing")
    dist_cfg = {"distribution": raw.pop("distribution")}
    for key in _DIST_KEYS & raw.keys():
        dist_cfg[key] = raw.pop(key)
    try:
        dist = distribution_from_config(dist_cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError("distribution", str(exc)) from None
    rules = [k for k in ("m", "u", "ratio", "delta") if k in raw]
    if len(rules) != 1:
        raise ConfigError("m", "give exactly one of m, u, ratio, delta")
    rule = rules[0]
    value = raw.pop(rule)
    shape = {
        "m": ShapeRule("fixed", value),
        "u": ShapeRule("offset", value),
        "ratio": ShapeRule("ratio", Fraction(value)),
        "delta": ShapeRule("ratio", 2 + Fraction(value)),
    }[rule]
    if rule == "delta" and value < 0:
        raise ConfigError("delta", "must be >= 0")
    return ExperimentConfig(
        kind=raw.pop("kind"),
        distribution=dist,
        n_values=tuple(raw.pop("n")),
        shape=shape,
        trials=raw.pop("trials"),
        seed=raw.pop("seed"),
        **raw,
    )


def load_config(text: str) -> ExperimentConfig:
    return config_from_dict(parse_config_text(text))


# -- statistics ---------------------------------------------------------------

def clopper_pearson(successes: int, trials: int, confidence: float = 0.95) -> tuple:
    """Exact two-sided binomial interval."""
    alpha = 1 - confidence
    lo = 0.0 if successes == 0 else float(beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(p * (1 - p) / trials)


def within_sigmas(successes: int, trials: int, p: float, k: float = 4.0) -> bool:
    return abs(successes / trials - p) <= k * binomial_sigma(p, trials)


def _rate_block(successes: int, trials: int) -> dict:
    lo, hi = clopper_pearson(successes, trials)
    return {"count": successes, "rate": successes / trials, "ci95": [lo, hi]}


def _num(x) -> str:
    return mpmath.nstr(x, 15)


# -- trials -------------------------------------------------------------------

def _trial(config: ExperimentConfig, n: int, m: int, t: int) -> tuple:
    A = sample(config.distribution, n, m, SeededSource(config.seed).child(n, m), t)
    if config.kind == "padic_rank":
        return (rank_mod_p(A, config.distribution.p) == n,)
    if config.kind == "cokernel_census":
        cok = cokernel(A)
        parts = []
        for p in config.primes:
            lam = cok.sylow(p) if cok.free_rank == 0 else OVERFLOW
            if lam != OVERFLOW and sum(lam) > config.max_partition:
                lam = OVERFLOW
            parts.append(lam)
        return (cok.is_trivial, tuple(parts))
    verdict = is_surjective_fast(A, rho_budget=config.rho_budget, seed=t)
    if config.kind == "adversarial_failure":
        return (verdict.surjective, verdict.method, all(x % 2 == 0 for x in A.entries))
    return (verdict.surjective, verdict.method)


def _trial_chunk(args) -> list:
    config, n, m, start, stop = args
    return [_trial(config, n, m, t) for t in range(start, stop)]


def _collect(config: ExperimentConfig, workers: int) -> list:
    shapes = config.shapes()
    if workers <= 1:
        return [[_trial(config, n, m, t) for t in range(config.trials)] for n, m, _ in shapes]
    chunk = max(1, config.trials // (4 * workers))
    jobs = []
    for n, m, _ in shapes:
        for start in range(0, config.trials, chunk):
            jobs.append((config, n, m, start, min(start + chunk, config.trials)))
    with ProcessPoolExecutor(workers) as pool:
        done = list(pool.map(_trial_chunk, jobs))
    out = [[] for _ in shapes]
    k = 0
    for i, _ in enumerate(shapes):
        while len(out[i]) < config.trials:
            out[i].extend(done[k])
            k += 1
    return out


# -- results ------------------------------------------------------------------

@dataclass
class ExperimentResult:
    kind: str
    config: dict
    rows: list
    summary: dict = field(default_factory=dict)

    @property
    def provenance(self) -> dict:
        return {"seed": self.config["seed"], "version": __version__}

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "provenance": self.provenance,
            "rows": self.rows,
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "m", "label", "statistic", "count", "trials", "value", "ci_low", "ci_high", "reference"])
        for row in self.rows:
            for stat in row["statistics"]:
                ci = stat.get("ci95", ["", ""])
                w.writerow([
                    row["n"], row["m"], row.get("label", ""), stat["name"],
                    stat.get("count", ""), row["trials"], stat.get("rate", ""),
                    ci[0], ci[1], stat.get("reference", ""),
                ])
        return buf.getvalue()


def _surjectivity_reference(config: ExperimentConfig, n: int, m: int) -> dict:
    u = m - n if config.shape.kind == "offset" else None
    if isinstance(config.distribution, TruncatedHaar):
        exact = padic_surjectivity_probability(n, m, config.distribution.p)
        return {"value": str(exact), "float": float(exact), "status": "exact at finite n"}
    if u == 0:
        return {"value": "0", "float": 0.0, "status": "limit = 0 (proven)"}
    if u is not None:
        lim = zeta_product_limit(u)
        return {"value": _num(lim.value), "float": float(lim), "status": "conjectured limit"}
    if m >= 2 * n + 1 or (config.shape.kind == "ratio" and Fraction(config.shape.value) > 2):
        return {"value": "1", "float": 1.0, "status": "limit = 1 (proven, exponential rate)"}
    return {"value": "1", "float": 1.0, "status": "conjectured limit"}


def _base_row(n: int, m: int, label: str, records: list) -> dict:
    row = {"n": n, "m": m, "trials": len(records)}
    if label:
        row["label"] = label
    return row


def _surjectivity_rows(config: ExperimentConfig, collected: list) -> list:
    rows = []
    for (n, m, label), recs in zip(config.shapes(), collected):
        row = _base_row(n, m, label, recs)
        surj = sum(1 for r in recs if r[0])
        ref = _surjectivity_reference(config, n, m)
        stat = {"name": "surjective", **_rate_block(surj, len(recs)), "reference": ref["value"]}
        row["statistics"] = [stat]
        row["surjective"] = surj
        row["reference"] = ref
        if len(recs[0]) > 1:
            methods = {}
            for r in recs:
                methods[r[1]] = methods.get(r[1], 0) + 1
            row["methods"] = methods
        rows.append(row)
    return rows


def _census_rows(config: ExperimentConfig, collected: list) -> list:
    u = config.shape.offset
    rows = []
    for (n, m, label), recs in zip(config.shapes(), collected):
        row = _base_row(n, m, label, recs)
        surj = sum(1 for r in recs if r[0])
        ref = _surjectivity_reference(config, n, m)
        stats = [{"name": "surjective", **_rate_block(surj, len(recs)), "reference": ref["value"]}]
        census = {}
        for idx, p in enumerate(config.primes):
            tally = {}
            for r in recs:
                key = r[1][idx]
                key = OVERFLOW if key == OVERFLOW else ",".join(map(str, key))
                tally[key] = tally.get(key, 0) + 1
            entries = []
            covered = mpmath.mpf(0)
            for lam in partitions_up_to(config.max_partition):
                key = ",".join(map(str, lam))
                count = tally.get(key, 0)
                entry = {"partition": key or "trivial", **_rate_block(count, len(recs))}
                if u is not None:
                    mass = wood_mass([FiniteAbelianPGroup(p, lam)], u, [p])
                    covered += mass.value
                    entry["predicted"] = float(mass)
                    entry["predicted_error"] = float(mass.error_bound)
                entries.append(entry)
                stats.append({
                    "name": f"sylow{p}:{key or 'trivial'}",
                    **_rate_block(count, len(recs)),
                    "reference": entry.get("predicted", ""),
                })
            over = {"partition": OVERFLOW, **_rate_block(tally.get(OVERFLOW, 0), len(recs))}
            if u is not None:
                over["predicted"] = float(1 - covered)
            entries.append(over)
            stats.append({
                "name": f"sylow{p}:{OVERFLOW}",
                **_rate_block(tally.get(OVERFLOW, 0), len(recs)),
                "reference": over.get("predicted", ""),
            })
            census[str(p)] = entries
        row["statistics"] = stats
        row["surjective"] = surj
        row["reference"] = ref
        row["census"] = census
        row["prediction_status"] = "conjectured finite-n comparison with limiting masses"
        rows.append(row)
    return rows


def adversarial_bound(n: int, m: int) -> Fraction:
    """(1 - 2^-nm)^(2^nm n): upper bound on the adversarial surjectivity rate."""
    return (1 - Fraction(1, 2 ** (n * m))) ** (2 ** (n * m) * n)


def _adversarial_rows(config: ExperimentConfig, collected: list) -> list:
    rows = _surjectivity_rows(config, collected)
    for row, recs in zip(rows, collected):
        n, m = row["n"], row["m"]
        bound = adversarial_bound(n, m)
        row["bound"] = float(bound)
        row["bound_status"] = "proven upper bound"
        even = sum(1 for r in recs if r[2])
        row["statistics"][0]["reference"] = float(bound)
        row["statistics"].append({
            "name": "all_entries_even",
            **_rate_block(even, len(recs)),
            "reference": 2.0 ** -(n * m),
        })
        row["all_entries_even"] = even
        del row["reference"]
    return rows


def _decay_rows(config: ExperimentConfig, collected: list) -> tuple:
    rows = []
    for (n, m, label), recs in zip(config.shapes(), collected):
        row = _base_row(n, m, label, recs)
        fails = sum(1 for r in recs if not r[0])
        block = _rate_block(fails, len(recs))
        row["failures"] = fails
        row["statistics"] = [{"name": "failure", **block, "reference": ""}]
        if fails == 0:
            row["flag"] = "rate below resolution"
        rows.append(row)
    main = [r for r in rows if "label" not in r]
    fit = [r for r in main if r["failures"] >= MIN_FAILURES_FOR_FIT]
    summary = {"fit_points": [r["n"] for r in fit]}
    if len(fit) >= 2:
        x = np.array([r["n"] for r in fit], dtype=float)
        y = np.log([r["failures"] / r["trials"] for r in fit])
        slope, intercept = np.polyfit(x, y, 1)
        summary["log_failure_slope"] = float(slope)
        summary["log_failure_intercept"] = float(intercept)
    else:
        summary["log_failure_slope"] = None
    summary["monotone_within_ci"] = failures_nonincreasing(main)
    summary["note"] = "slope is descriptive; no rate constant is estimated"
    return rows, summary


def failures_nonincreasing(rows: list) -> bool:
    """True when no later shape's failure interval lies wholly above an earlier one's."""
    for i, a in enumerate(rows):
        for b in rows[i + 1:]:
            if b["statistics"][0]["ci95"][0] > a["statistics"][0]["ci95"][1]:
                return False
    return True


def run(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every trial of ``config``; the result is independent of ``workers``."""
    if isinstance(config.distribution, Adversarial):
        for n, m, _ in config.shapes():
            adversarial_primes(n, m)  # fail early on oversized shapes
    collected = _collect(config, workers)
    summary = {}
    if config.kind == "cokernel_census":
        rows = _census_rows(config, collected)
    elif config.kind == "adversarial_failure":
        rows = _adversarial_rows(config, collected)
    elif config.kind == "decay_curve":
        rows, summary = _decay_rows(config, collected)
    else:
        rows = _surjectivity_rows(config, collected)
    if config.kind == "padic_rank":
        for row in rows:
            row["statistics"][0]["name"] = "full_rank_mod_p"
    return ExperimentResult(config.kind, config.to_dict(), rows, summary)


def _require(config: ExperimentConfig, kind: str) -> None:
    if config.kind != kind:
        raise ConfigError("kind", f"expected {kind}, got {config.kind}")


def cokernel_census(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    _require(config, "cokernel_census")
    return run(config, workers)


def adversarial_failure(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    _require(config, "adversarial_failure")
    return run(config, workers)


def decay_curve(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    _require(config, "decay_curve")
    return run(config, workers)
