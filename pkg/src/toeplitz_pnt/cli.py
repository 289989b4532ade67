"""Command-line experiment runner.

Every subcommand accepts ``--config FILE`` (JSON).  Flags mirror config keys and
win over the file.  The merged config is validated against the subcommand's
JSON schema before anything runs.  Data goes to ``--out`` (or stdout); progress
goes to stderr; failures print one JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .arith import set_threads, table_for
from .averaging import (
    ObservableSpec,
    oscillation_witness,
    poly_average,
    predicted_poly_limit,
    predicted_prime_limit,
    prime_average,
    reports_to_csv,
    semiprime_average,
)
from .constructions import (
    BUILDERS,
    THEOREMS,
    BuildConfig,
    build_bounded_holes,
    certificates_to_jsonl,
    validate_stage,
)
from .errors import ToeplitzPNTError
from .polyres import PolynomialSpec, albis_bound_check, psi, rho_max, tilde_psi
from .sturmian import RotationSpec, prime_orbit_average, squeeze_check, vinogradov_sum
from .toeplitz import ToeplitzSkeleton, hole_report

log = logging.getLogger("toeplitz_pnt")

EXIT_CHECK_FAILED = 1
EXIT_SCHEMA = 2
EXIT_BUDGET = 3
EXIT_BUILD = 4
EXIT_ERROR = 5

_POS_INT = {"type": "integer", "minimum": 1}
_RATIONAL = {"type": ["string", "number"]}

SCHEMAS: dict[str, dict] = {
    "construct": {
        "type": "object",
        "properties": {
            "theorem": {"enum": list(THEOREMS)},
            "growth_constant": {"type": "integer", "minimum": 2},
            "stage_budget": _POS_INT,
            "modulus_budget": {"type": "integer", "minimum": 2},
            "fill_policy": {"enum": ["alternating-target", "seeded-random"]},
            "oscillation_target": _RATIONAL,
            "totient_ratio": _RATIONAL,
            "holed_fraction": _RATIONAL,
            "noncoprime_fraction": _RATIONAL,
            "initial_modulus": {"type": ["integer", "null"], "minimum": 2},
            "prime_support": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
            "preset": {"enum": ["desk", "strict"]},
            "periods": {"type": "array", "items": _POS_INT, "minItems": 1},
            "holes_per_stage": _POS_INT,
            "alphabet_size": {"type": "integer", "minimum": 2},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
        },
        "required": ["theorem", "out"],
        "additionalProperties": False,
    },
    "validate": {
        "type": "object",
        "properties": {
            "skeleton": {"type": "string"},
            "theorem": {"enum": list(THEOREMS)},
            "stages": {"type": "array", "items": _POS_INT},
            "out": {"type": "string"},
        },
        "required": ["skeleton", "theorem"],
        "additionalProperties": False,
    },
    "average": {
        "type": "object",
        "properties": {
            "skeleton": {"type": "string"},
            "kind": {"enum": ["primes", "semiprimes", "polynomial"]},
            "N": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
            "r": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
            "poly": {"type": "string"},
            "observable": {"enum": ["sign", "indicator0", "indicator1"]},
            "observable_table": {"type": "object"},
            "predict_stage": _POS_INT,
            "mode": {"enum": ["ordered", "distinct"]},
            "out": {"type": "string"},
        },
        "required": ["skeleton", "kind", "N"],
        "additionalProperties": False,
    },
    "oscillate": {
        "type": "object",
        "properties": {
            "skeleton": {"type": "string"},
            "kind": {"enum": ["primes", "semiprimes", "polynomial"]},
            "poly": {"type": "string"},
            "out": {"type": "string"},
        },
        "required": ["skeleton", "kind"],
        "additionalProperties": False,
    },
    "residues": {
        "type": "object",
        "properties": {
            "poly": {"type": "string"},
            "n_min": {"type": "integer", "minimum": 1},
            "n_max": {"type": "integer", "minimum": 1},
            "out": {"type": "string"},
        },
        "required": ["poly", "n_min", "n_max"],
        "additionalProperties": False,
    },
    "sturmian": {
        "type": "object",
        "properties": {
            "N": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
            "beta": _RATIONAL,
            "bits": {"type": "integer", "minimum": 96},
            "epsilon": {"type": "number", "exclusiveMinimum": 0},
            "out": {"type": "string"},
        },
        "required": ["N"],
        "additionalProperties": False,
    },
    "acceptance": {
        "type": "object",
        "properties": {
            "only": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 12}},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
        },
        "additionalProperties": False,
    },
}


class SchemaError(ToeplitzPNTError):
    kind = "schema"


# ------------------------------------------------------------------- helpers


def _metadata(command: str, config: dict) -> dict:
    # the output location does not change the content, so it stays out of the hash
    blob = json.dumps({"command": command, **{k: v for k, v in config.items() if k != "out"}}, sort_keys=True)
    return {
        "command": command,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "numpy": np.__version__,
        "toeplitz_pnt": __version__,
    }


def _emit(text: str, out: str | None, name: str | None = None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if name is not None:
        path.mkdir(parents=True, exist_ok=True)
        path = path / name
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _observable(config: dict) -> ObservableSpec:
    if "observable_table" in config:
        return ObservableSpec.from_dict(config["observable_table"])
    name = config.get("observable", "sign")
    if name == "sign":
        return ObservableSpec.sign()
    return ObservableSpec.indicator(int(name[-1]))


def _load_skeleton(path: str) -> ToeplitzSkeleton:
    return ToeplitzSkeleton.load(path)


def _csv(header: list[str], rows: list[list], metadata: dict) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else repr(v) if isinstance(v, float) else str(v) for v in row))
    lines += [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(metadata.items())]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- subcommands


def cmd_construct(config: dict) -> int:
    theorem = config["theorem"]
    if theorem == "bounded":
        if "periods" not in config:
            raise SchemaError("the bounded family needs 'periods'")
        skel = build_bounded_holes(config.get("alphabet_size", 2), config["periods"],
                                   config.get("holes_per_stage", 1), seed=config.get("seed", 0))
        certs = [validate_stage(skel, t, "bounded") for t in range(1, skel.n_stages + 1)]
    else:
        keys = {k: v for k, v in config.items()
                if k not in ("theorem", "out", "preset", "periods", "holes_per_stage", "alphabet_size")}
        if config.get("preset") == "strict":
            build = BuildConfig.from_dict({**BuildConfig.strict().to_dict(), **keys})
        elif theorem == "SPNT":
            build = BuildConfig.from_dict({**BuildConfig.spnt_desk().to_dict(), **keys})
        else:
            build = BuildConfig.from_dict(keys)
        skel, certs = BUILDERS[theorem](build)
    _emit(skel.to_text(), config["out"], "skeleton.txt")
    _emit(certificates_to_jsonl(certs), config["out"], "certificates.jsonl")
    rows = [[r["stage"], r["period"], r["holes"], r["per_period"], r["per_phi"]] for r in hole_report(skel).as_dicts()]
    _emit(_csv(["stage", "period", "holes", "holes_over_period", "holes_over_phi"], rows, _metadata("construct", config)),
          config["out"], "holes.csv")
    failed = [c for c in certs if not c.passed]
    return EXIT_CHECK_FAILED if failed else 0


def cmd_validate(config: dict) -> int:
    skel = _load_skeleton(config["skeleton"])
    stages = config.get("stages") or list(range(1, skel.n_stages + 1))
    certs = [validate_stage(skel, t, config["theorem"]) for t in stages]
    _emit(certificates_to_jsonl(certs), config.get("out"))
    failed = sorted({f"stage {c.stage}: {name}" for c in certs for name in c.failed()})
    if failed:
        sys.stderr.write(json.dumps({"error": "certificate", "failed": failed}, sort_keys=True) + "\n")
        return EXIT_CHECK_FAILED
    return 0


def cmd_average(config: dict) -> int:
    skel = _load_skeleton(config["skeleton"])
    F = _observable(config)
    kind = config["kind"]
    P = PolynomialSpec.parse(config.get("poly", "m^2")) if kind == "polynomial" else None
    stage = config.get("predict_stage")
    reports = []
    for N in config["N"]:
        for r in config.get("r", [0]):
            if kind == "primes":
                rep = prime_average(skel, F, N, r)
                pred = predicted_prime_limit(skel, stage, F, r, N=N) if stage else None
            elif kind == "semiprimes":
                rep = semiprime_average(skel, F, N, r, mode=config.get("mode", "ordered"))
                pred = predicted_prime_limit(skel, stage, F, r) if stage else None
            else:
                rep = poly_average(skel, P, F, N, r)
                pred = predicted_poly_limit(skel, P, stage, F, r, N=N) if stage else None
            if pred is not None:
                rep.predicted, rep.error_bound = pred.value, pred.error_bound
            reports.append(rep)
            log.info("%s N=%d r=%d done", kind, N, r)
    _emit(reports_to_csv(reports, _metadata("average", config)), config.get("out"))
    return 0


def cmd_oscillate(config: dict) -> int:
    skel = _load_skeleton(config["skeleton"])
    P = PolynomialSpec.parse(config.get("poly", "m^2")) if config["kind"] == "polynomial" else None
    rows = [[t, skel.period(t), v, g] for t, v, g in oscillation_witness(skel, config["kind"], P=P)]
    _emit(_csv(["stage", "period", "average", "gap"], rows, _metadata("oscillate", config)), config.get("out"))
    return 0


def cmd_residues(config: dict) -> int:
    P = PolynomialSpec.parse(config["poly"])
    lo, hi = config["n_min"], config["n_max"]
    if hi < lo:
        raise SchemaError("n_max must be >= n_min")
    square = P.coefficients == (0, 0, 1)
    rows = []
    for n in range(lo, hi + 1):
        row = [n, psi(P, n), rho_max(P, n), int(albis_bound_check(P, n))]
        if square:
            row.append(tilde_psi(n))
        rows.append(row)
    header = ["n", "psi", "rho_max", "albis_bound"] + (["tilde_psi"] if square else [])
    _emit(_csv(header, rows, _metadata("residues", config)), config.get("out"))
    return 0


def cmd_sturmian(config: dict) -> int:
    beta = config.get("beta")
    spec = RotationSpec.golden(beta=Fraction(str(beta)) if beta is not None else None,
                               bits=config.get("bits", 128))
    eps = config.get("epsilon", 0.01)
    F = ObservableSpec.indicator(0)
    rows = []
    for N in config["N"]:
        table = table_for(N)
        avg = prime_orbit_average(spec, F, N, table)
        sq = squeeze_check(spec, N, eps, table)
        rows.append([N, avg.value, avg.predicted, vinogradov_sum(spec, N, table), sq.lower, sq.upper,
                     int(sq.sandwiched), avg.extra["drift_bound"]])
    meta = _metadata("sturmian", config)
    meta["alpha_denominator"] = str(spec.surrogate[1])
    _emit(_csv(["N", "average", "lebesgue", "vinogradov", "f_minus", "f_plus", "sandwiched", "drift_bound"],
               rows, meta), config.get("out"))
    return 0


def cmd_acceptance(config: dict) -> int:
    from .acceptance import run

    results, ctx = run(config.get("only"), seed=config.get("seed", 0))
    for res in results:
        print(res.line(), flush=True)
        log.info("criterion %d took %.1fs", res.number, res.seconds)
    out = config.get("out")
    if out:
        for name, text in sorted(ctx.artifacts.items()):
            _emit(text, out, name)
        summary = [{"number": r.number, "name": r.name, "passed": r.passed, "soft": r.soft, "detail": r.detail}
                   for r in results]
        _emit(json.dumps(summary, indent=1, sort_keys=True) + "\n", out, "summary.json")
    return 0 if all(r.passed for r in results) else EXIT_CHECK_FAILED


COMMANDS = {
    "construct": cmd_construct,
    "validate": cmd_validate,
    "average": cmd_average,
    "oscillate": cmd_oscillate,
    "residues": cmd_residues,
    "sturmian": cmd_sturmian,
    "acceptance": cmd_acceptance,
}


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toeplitz-pnt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=1, help="worker cap for sieving")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress records on stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def command(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, argument_default=S)
        p.add_argument("--config", help="JSON config file; flags override its keys")
        return p

    p = command("construct", "build a skeleton and its certificates")
    p.add_argument("--theorem", choices=THEOREMS)
    p.add_argument("--c", dest="growth_constant", type=int)
    p.add_argument("--stages", dest="stage_budget", type=int)
    p.add_argument("--budget", dest="modulus_budget", type=int)
    p.add_argument("--fill-policy", dest="fill_policy")
    p.add_argument("--target", dest="oscillation_target")
    p.add_argument("--totient-ratio", dest="totient_ratio")
    p.add_argument("--holed-fraction", dest="holed_fraction")
    p.add_argument("--noncoprime-fraction", dest="noncoprime_fraction")
    p.add_argument("--initial-modulus", dest="initial_modulus", type=int)
    p.add_argument("--support", dest="prime_support", type=int, nargs="+")
    p.add_argument("--preset", choices=["desk", "strict"])
    p.add_argument("--periods", type=int, nargs="+")
    p.add_argument("--holes", dest="holes_per_stage", type=int)
    p.add_argument("--alphabet", dest="alphabet_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")

    p = command("validate", "recompute stage certificates of a skeleton file")
    p.add_argument("--skeleton")
    p.add_argument("--theorem", choices=THEOREMS)
    p.add_argument("--stages", type=int, nargs="+")
    p.add_argument("--out")

    p = command("average", "averages of an observable along primes, semiprimes or P(m)")
    p.add_argument("--skeleton")
    p.add_argument("--kind")
    p.add_argument("--N", type=int, nargs="+")
    p.add_argument("--r", type=int, nargs="+")
    p.add_argument("--poly")
    p.add_argument("--observable")
    p.add_argument("--predict-stage", dest="predict_stage", type=int)
    p.add_argument("--mode")
    p.add_argument("--out")

    p = command("oscillate", "stage-scale averages and their gaps")
    p.add_argument("--skeleton")
    p.add_argument("--kind")
    p.add_argument("--poly")
    p.add_argument("--out")

    p = command("residues", "residue statistics of a polynomial for a range of moduli")
    p.add_argument("--poly")
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--out")

    p = command("sturmian", "prime-orbit checks for a golden rotation")
    p.add_argument("--N", type=int, nargs="+")
    p.add_argument("--beta")
    p.add_argument("--bits", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out")

    p = command("acceptance", "run the acceptance suite")
    p.add_argument("--only", type=int, nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="artifact directory")
    return parser


def merged_config(command: str, args: argparse.Namespace) -> dict:
    config: dict = {}
    path = getattr(args, "config", None)
    if path:
        config.update(json.loads(Path(path).read_text()))
    for key, value in vars(args).items():
        if key not in ("command", "config", "threads", "verbose"):
            config[key] = value
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{where}: {exc.message}") from None
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    set_threads(args.threads)
    try:
        config = merged_config(args.command, args)
        return COMMANDS[args.command](config)
    except ToeplitzPNTError as exc:
        sys.stderr.write(json.dumps(exc.record(), sort_keys=True) + "\n")
        codes = {"schema": EXIT_SCHEMA, "budget": EXIT_BUDGET, "build": EXIT_BUILD, "certificate": EXIT_BUILD}
        return codes.get(exc.kind, EXIT_ERROR)
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
