"""Command-line interface.

Exit codes: 0 success / surjective, 10 not surjective, 2 bad input,
3 resource limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .exact_linalg import smith_normal_form
from .distributions import ResourceLimitError, SeededSource, sample_adversarial
from .experiments import ConfigError, load_config, run
from .factorization import FactorizationIncomplete
from .matrix_io import MatrixFormatError, format_matrix, read_matrix
from .surjectivity import (
    FastPathCertificate,
    InvariantFactorWitness,
    PrimeWitness,
    cokernel,
    is_surjective_fast,
    is_surjective_snf,
)
from .theory import (
    FiniteAbelianPGroup,
    finite_n_zhat_probability,
    padic_surjectivity_probability,
    wood_mass,
    zeta_product_limit,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RESOURCE = 3
EXIT_NOT_SURJECTIVE = 10


class InputError(Exception):
    pass


def _dump(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _load(path):
    try:
        return read_matrix(path)
    except MatrixFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _witness_json(w) -> dict:
    if isinstance(w, PrimeWitness):
        return {"type": "prime", "p": str(w.p), "rank_mod_p": w.rank}
    if isinstance(w, InvariantFactorWitness):
        out = {
            "type": "invariant_factors",
            "torsion": [str(d) for d in w.torsion],
            "free_rank": w.free_rank,
        }
        if w.prime is not None:
            out["p"] = str(w.prime)
        return out
    if isinstance(w, FastPathCertificate):
        return {
            "type": "fast_path",
            "columns": list(w.columns),
            "det": str(w.det),
            "primes": [str(p) for p in w.primes],
        }
    return {"type": "none"}


def cmd_check(args) -> int:
    A = _load(args.path)
    if args.method == "snf":
        verdict = is_surjective_snf(A)
    else:
        verdict = is_surjective_fast(A, seed=args.seed)
    if args.json:
        _dump({
            "surjective": verdict.surjective,
            "method": verdict.method,
            "rows": A.rows,
            "cols": A.cols,
            "witness": _witness_json(verdict.witness),
        })
    elif verdict.surjective:
        print(f"surjective (method {verdict.method})")
        w = verdict.witness
        if isinstance(w, FastPathCertificate):
            print(f"det(B) = {w.det} on columns {list(w.columns)}")
            print("full rank mod " + (", ".join(map(str, w.primes)) or "every prime (unit det)"))
    else:
        w = verdict.witness
        if verdict.prime is not None:
            print(f"not surjective, p={verdict.prime}")
        else:
            print("not surjective")
        if isinstance(w, InvariantFactorWitness):
            if w.torsion:
                print("torsion invariant factors: " + " ".join(map(str, w.torsion)))
            if w.free_rank:
                print(f"free rank: {w.free_rank}")
        elif isinstance(w, PrimeWitness):
            print(f"rank mod {w.p} = {w.rank} < {A.rows}")
    return EXIT_OK if verdict.surjective else EXIT_NOT_SURJECTIVE


def cmd_snf(args) -> int:
    A = _load(args.path)
    cok = cokernel(A)
    snf = smith_normal_form(A)
    try:
        primes = cok.primes()
        sylow = {str(p): list(cok.sylow(p)) for p in primes}
        note = None
    except FactorizationIncomplete as exc:
        sylow, note = {}, f"torsion not fully factored (cofactor {exc.cofactor})"
    if args.json:
        out = {
            "invariant_factors": [str(d) for d in snf.invariant_factors],
            "rank": snf.rank,
            "free_rank": cok.free_rank,
            "torsion": [str(d) for d in cok.torsion],
            "sylow": sylow,
        }
        if note:
            out["note"] = note
        _dump(out)
    else:
        print(" ".join(map(str, snf.invariant_factors)))
        print(f"free rank: {cok.free_rank}")
        for p, lam in sylow.items():
            print(f"sylow({p}): {lam}")
        if note:
            print(note)
    return EXIT_OK


def _summary_table(result) -> str:
    lines = [f"{result.kind}  seed={result.config['seed']}"]
    for row in result.rows:
        stat = row["statistics"][0]
        lo, hi = stat["ci95"]
        label = f"  [{row['label']}]" if row.get("label") else ""
        ref = stat.get("reference", "")
        ref = f"  ref={ref}" if ref != "" else ""
        status = row.get("reference", {}).get("status", "") if isinstance(row.get("reference"), dict) else ""
        status = f" ({status})" if status else ""
        flag = f"  {row['flag']}" if row.get("flag") else ""
        lines.append(
            f"n={row['n']:<3} m={row['m']:<3} {stat['name']}={stat['rate']:.4f} "
            f"[{lo:.4f}, {hi:.4f}]{ref}{status}{label}{flag}"
        )
    for key, value in sorted(result.summary.items()):
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def cmd_experiment(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        config = load_config(text)
    except OSError as exc:
        raise InputError(f"{args.config}: {exc}") from None
    except ConfigError as exc:
        raise InputError(f"{args.config}: invalid config key {exc}") from None
    result = run(config, workers=args.workers)
    prefix = Path(args.out) if args.out else Path(Path(args.config).stem)
    if prefix.suffix in (".json", ".csv"):
        prefix = prefix.with_suffix("")
    prefix.parent.mkdir(parents=True, exist_ok=True)
    json_path = prefix.parent / (prefix.name + ".json")
    csv_path = prefix.parent / (prefix.name + ".csv")
    json_path.write_text(result.to_json(), encoding="utf-8")
    csv_path.write_text(result.to_csv(), encoding="utf-8")
    print(_summary_table(result))
    print(f"wrote {json_path} and {csv_path}")
    return EXIT_OK


def _parse_group(spec: str) -> FiniteAbelianPGroup:
    # "p:l1,l2,..." or "p:" for the trivial group
    try:
        p, _, parts = spec.partition(":")
        lam = tuple(int(x) for x in parts.split(",") if x.strip())
        return FiniteAbelianPGroup(int(p), tuple(sorted(lam, reverse=True)))
    except ValueError as exc:
        raise InputError(f"bad group {spec!r}: {exc}") from None


def cmd_theory(args) -> int:
    out = {}
    try:
        if args.padic:
            n, m, p = args.padic
            out["padic"] = str(padic_surjectivity_probability(n, m, p))
        if args.zeta_limit is not None:
            out["zeta_limit"] = zeta_product_limit(args.zeta_limit)
        if args.zhat:
            n, u = args.zhat
            out["zhat"] = finite_n_zhat_probability(n, u)
        if args.wood is not None:
            groups = [_parse_group(s) for s in args.wood]
            primes = args.primes or sorted({G.p for G in groups})
            out["wood"] = wood_mass(groups, args.u, primes)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if not out:
        raise InputError("give at least one of --padic, --zeta-limit, --zhat, --wood")
    if args.json:
        rendered = {}
        for key, val in out.items():
            if isinstance(val, str):
                rendered[key] = {"value": val, "exact": True}
            else:
                rendered[key] = {
                    "value": val.format(40).split(" ")[0],
                    "error_bound": f"{float(val.error_bound):.3e}",
                    "exact": val.exact,
                }
        _dump(rendered)
    else:
        for key, val in out.items():
            print(val if isinstance(val, str) else val.format())
    return EXIT_OK


def cmd_counterexample(args) -> int:
    A = sample_adversarial(args.n, args.m, SeededSource(args.seed, (args.n, args.m)), 0)
    text = format_matrix(
        A, f"adversarial {args.n}x{args.m}, first {2 ** (args.n * args.m) * args.n} primes, seed {args.seed}"
    )
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intsurj", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide surjectivity of a matrix file")
    p.add_argument("path")
    p.add_argument("--method", choices=("snf", "fast"), default="fast")
    p.add_argument("--seed", type=int, default=0, help="seed for random column retries")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("snf", help="Smith form and cokernel of a matrix file")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_snf)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment from a config file")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output prefix; writes PREFIX.json and PREFIX.csv")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("theory", help="evaluate closed-form probabilities")
    p.add_argument("--padic", nargs=3, type=int, metavar=("N", "M", "P"))
    p.add_argument("--zeta-limit", type=int, metavar="U")
    p.add_argument("--zhat", nargs=2, type=int, metavar=("N", "U"))
    p.add_argument("--wood", nargs="*", metavar="P:PARTITION",
                   help="Sylow parts such as 2:1,1 (use 2: for trivial)")
    p.add_argument("--u", type=int, default=1)
    p.add_argument("--primes", type=lambda s: [int(x) for x in s.split(",")])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("counterexample", help="write an adversarial large-entry matrix")
    p.add_argument("n", type=int)
    p.add_argument("m", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
