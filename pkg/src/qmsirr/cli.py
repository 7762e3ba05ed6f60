"""Command-line front end.

Exit codes: 0 success, 1 usage or input errors, 2 when two routes that must
agree do not (the offending witness is printed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import jsonschema
import numpy as np

from . import catalog, generic, gksl, sse, structure
from .errors import InternalError, NotApplicable, ParseError, QmsError
from .matkit import DEFAULT_RANK_TOL

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

REPORT_SCHEMA_VERSION = 1

_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _PAIR}}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["dim", "H"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "H": _MATRIX,
        "L": {"type": "array", "items": _MATRIX},
    },
    "additionalProperties": False,
}

_VERDICT = {
    "type": "object",
    "required": ["irreducible", "method", "tol"],
    "properties": {"irreducible": {"type": "boolean"}, "method": {"type": "string"}, "tol": {"type": "number"}},
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema", "model", "minimality", "irreducibility", "invariant_states",
                 "fixed_points", "decoherence_free", "larc", "s_xi"],
    "properties": {
        "schema": {"const": REPORT_SCHEMA_VERSION},
        "model": {
            "type": "object",
            "required": ["fingerprint", "dim", "m_original", "m_minimal"],
            "properties": {"fingerprint": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                           "dim": {"type": "integer"}, "m_original": {"type": "integer"},
                           "m_minimal": {"type": "integer"}},
        },
        "minimality": {"type": "object", "required": ["minimal", "tol"]},
        "irreducibility": {
            "type": "object",
            "required": ["irreducible", "methods"],
            "properties": {"irreducible": {"type": "boolean"},
                           "methods": {"type": "array", "items": _VERDICT, "minItems": 2}},
        },
        "invariant_states": {"type": "object", "required": ["kernel_dim", "unique", "faithful", "tol"]},
        "fixed_points": {"type": "object", "required": ["dim", "method", "tol"]},
        "decoherence_free": {"type": "object", "required": ["status", "tol"]},
        "larc": {"type": "object", "required": ["minimal", "method", "tol"]},
        "s_xi": {"type": "object", "required": ["method", "tol", "probes"]},
        "sse": {"type": "object"},
    },
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- input --------------------------------------------------------------------------

def _load_json_file(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def model_from_data(data) -> gksl.LindbladModel:
    try:
        jsonschema.validate(data, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParseError(f"model invalid at field {where}: {exc.message}") from None
    return gksl.model_from_dict(data)


def parse_model(source: str):
    """Catalog name or JSON path -> ``(model, rates)``; ``rates`` is ``None`` unless a rate graph."""
    if source in catalog.CATALOG:
        entry = catalog.get(source)
        return entry.build(), (entry.rates() if entry.rates else None)
    if not os.path.exists(source):
        raise UsageError(f"{source!r} is neither a file nor a built-in model ({', '.join(sorted(catalog.CATALOG))})")
    data = _load_json_file(source)
    if generic.is_rates_dict(data):
        rates = generic.rates_from_dict(data)
        return generic.build_generic(*rates), rates
    return model_from_data(data), None


def parse_vector(text: str, d: int) -> np.ndarray:
    try:
        v = np.array([complex(s.strip().replace(" ", "")) for s in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}; use comma-separated numbers like 1,0 or 1+2j,0") from None
    if v.size != d:
        raise UsageError(f"vector has {v.size} entries, model dimension is {d}")
    if not np.any(v):
        raise UsageError("vector must be non-zero")
    return v


def _cv(v):
    return [[float(z.real), float(z.imag)] for z in np.ravel(v)]


def _cm(M):
    return [_cv(row) for row in np.asarray(M)]


def _emit(obj, out_path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out_path:
        try:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise UsageError(f"cannot write {out_path}: {exc.strerror}") from None
    else:
        print(text)


# --- analysis -----------------------------------------------------------------------

def _probe_vectors(d, n, seed):
    rng = np.random.default_rng(seed)
    vs = [np.eye(d, dtype=complex)[k] for k in range(d)]
    for _ in range(n):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        vs.append(v / np.linalg.norm(v))
    return vs


def analyze_model(model: gksl.LindbladModel, tol: float = DEFAULT_RANK_TOL, seed: int = 0,
                  probes: int = 5, larc_probes: int = 50) -> dict:
    """Full structural report.  Raises :class:`InternalError` on contradictory verdicts."""
    minimal, witness = gksl.check_minimal(model, tol)
    mini = model if minimal else gksl.minimalize(model, tol)
    d = model.d
    verdicts = structure.irreducibility_consistent(mini, tol)
    irreducible = verdicts[structure.ALGEBRA_GL].irreducible
    inv = structure.invariant_states(mini, tol)
    fp = structure.fixed_points(mini, tol)
    try:
        dfree = {"status": "trivial" if structure.decoherence_free_trivial(mini, tol) else "nontrivial"}
    except NotApplicable as exc:
        dfree = {"status": "not_applicable", "reason": str(exc)}
    larc_min = structure.larc_check(mini, larc_probes, seed, tol)
    larc_orig = structure.larc_check(model, larc_probes, seed, tol) if not minimal else None
    sx = []
    for xi in _probe_vectors(d, probes, seed):
        r = structure.s_xi_span(mini, xi, tol)
        sx.append({"xi": _cv(xi), "dim": r.dim})

    problems = []
    if larc_min.verdict == structure.HOLDS and not irreducible:
        problems.append("LARC holds for the minimal representation but the algebra is reducible")
    if irreducible and any(p["dim"] < d for p in sx):
        problems.append("irreducible model with a proper S(xi)")
    if irreducible and not (inv.unique and inv.faithful):
        problems.append("irreducible model without a unique faithful invariant state")
    if irreducible and fp.dim != 1:
        problems.append("irreducible model with non-trivial fixed points")
    if problems:
        raise InternalError("; ".join(problems))

    inv_d = inv.as_dict()
    inv_d.update(method="kernel of the Schrodinger superoperator", tol=tol)
    report = {
        "schema": REPORT_SCHEMA_VERSION,
        "model": {"fingerprint": gksl.fingerprint(model), "minimal_fingerprint": gksl.fingerprint(mini),
                  "dim": d, "m_original": model.m, "m_minimal": mini.m},
        "minimality": {"minimal": bool(minimal), "tol": tol,
                       "witness": None if witness is None else _cv(witness),
                       "minimalized_generator_deviation": float(gksl.generators_close(model, mini))},
        "irreducibility": {"irreducible": bool(irreducible),
                           "methods": [v.as_dict() for v in verdicts.values()]},
        "invariant_states": inv_d,
        "fixed_points": {"dim": fp.dim, "trivial": fp.trivial, "method": "kernel of the Heisenberg superoperator",
                         "tol": tol},
        "decoherence_free": dict(dfree, tol=tol),
        "larc": {"method": "sampled Lie-orbit rank", "tol": tol, "minimal": larc_min.as_dict(),
                 "original": None if larc_orig is None else larc_orig.as_dict()},
        "s_xi": {"method": "invariant closure under delta_G^n(L)", "tol": tol, "probes": sx},
    }
    jsonschema.validate(report, REPORT_SCHEMA)
    return report


# --- commands -----------------------------------------------------------------------

def _probes(args, default):
    return default if args.probes is None else args.probes


def cmd_analyze(args):
    model, _ = parse_model(args.model)
    report = analyze_model(model, args.tol, args.seed, _probes(args, 5))
    if args.xi is not None:
        xi = parse_vector(args.xi, model.d)
        cfg = sse.TrajectoryConfig(args.t, args.steps, args.traj, args.seed, args.scheme)
        report["sse"] = sse.verify_representation(model, xi, args.t, cfg).as_dict()
        jsonschema.validate(report, REPORT_SCHEMA)
    _emit(report, args.out)
    return EXIT_OK


def cmd_simulate(args):
    model, _ = parse_model(args.model)
    xi = parse_vector(args.xi, model.d)
    save_every = args.save_every or max(1, args.steps // 100)
    cfg = sse.TrajectoryConfig(args.t, args.steps, args.traj, args.seed, args.scheme, save_every=save_every)
    ens = sse.simulate_ito(model, xi, cfg)
    rep = sse.verify_representation(model, xi, args.t, cfg, ensemble=ens)
    print(rep.line())
    if args.csv:
        try:
            with open(args.csv, "w", encoding="utf-8", newline="") as fh:
                sse.write_trajectory_csv(ens, fh, max_traj=args.csv_traj)
        except OSError as exc:
            raise UsageError(f"cannot write {args.csv}: {exc.strerror}") from None
    if args.out:
        summary = {"schema": REPORT_SCHEMA_VERSION, "fingerprint": gksl.fingerprint(model),
                   "xi": _cv(xi), "representation": rep.as_dict(), "ensemble": sse.ensemble_summary(ens)}
        _emit(summary, args.out)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_support(args):
    model, _ = parse_model(args.model)
    xi = parse_vector(args.xi, model.d)
    res = structure.support_projection(model, xi, args.t, args.tol)
    rho = gksl.evolve_state(model, np.outer(xi, xi.conj()), args.t)
    srank = structure.state_rank(rho)
    out = {"schema": REPORT_SCHEMA_VERSION, "t": args.t, "xi": _cv(xi), "projection": _cm(res.projection),
           "rank": res.rank, "s_xi_dim": res.s_xi_dim, "evolved_state_rank": srank, "tol": args.tol}
    _emit(out, args.out)
    if srank != res.rank:
        print(f"support rank {res.rank} differs from evolved-state rank {srank}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_larc(args):
    model, _ = parse_model(args.model)
    n = _probes(args, 50)
    rep = structure.larc_check(model, n, args.seed, args.tol)
    no_drift = structure.larc_check(model, n, args.seed, args.tol, include_drift=False)
    _emit({"schema": REPORT_SCHEMA_VERSION, "fingerprint": gksl.fingerprint(model), "tol": args.tol,
           "larc": rep.as_dict(), "larc_without_drift": no_drift.as_dict()}, args.out)
    return EXIT_OK


def cmd_generic(args):
    _, rates = parse_model(args.rates)
    if rates is None:
        raise UsageError(f"{args.rates!r} is not a rate graph")
    rep = generic.verify_equivalences(*rates, n_random=_probes(args, 50), seed=args.seed, tol=args.tol)
    out = rep.as_dict()
    out["schema"] = REPORT_SCHEMA_VERSION
    out["rates"] = generic.rates_to_dict(*rates)
    _emit(out, args.out)
    return EXIT_OK


def cmd_examples(args):
    for name in sorted(catalog.CATALOG):
        e = catalog.CATALOG[name]
        model = e.build()
        print(f"{name:30s} d={model.d} m={model.m}  {e.description}")
    return EXIT_OK


def cmd_selftest(args):
    from . import acceptance

    results = acceptance.run_all(verbose=True, only=args.only)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_RANK_TOL, help="relative rank tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--probes", type=int, default=None,
                        help="number of random probe vectors (analyze: 5, larc/generic: 50)")
    common.add_argument("--out", help="write JSON here instead of stdout")

    sim = _Parser(add_help=False)
    sim.add_argument("--xi", help="initial vector, comma separated (complex allowed: 1+2j)")
    sim.add_argument("--t", type=float, default=1.0)
    sim.add_argument("--traj", type=int, default=10_000)
    sim.add_argument("--steps", type=int, default=1000)
    sim.add_argument("--scheme", choices=sse.SCHEMES, default=sse.EXPONENTIAL_EULER)

    p = _Parser(prog="qmsirr", description="Irreducibility and trajectory analysis of GKSL generators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common, sim], help="structural report (JSON)")
    a.add_argument("model")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", parents=[common, sim], help="Monte Carlo representation check")
    s.add_argument("model")
    s.add_argument("--csv", help="write trajectories as CSV")
    s.add_argument("--csv-traj", type=int, default=10, help="trajectories written to the CSV")
    s.add_argument("--save-every", type=int, default=None, help="store every k-th step")
    s.set_defaults(func=cmd_simulate)

    su = sub.add_parser("support", parents=[common], help="support projection of the evolved pure state")
    su.add_argument("model")
    su.add_argument("--xi", required=True)
    su.add_argument("--t", type=float, default=1.0)
    su.set_defaults(func=cmd_support)

    la = sub.add_parser("larc", parents=[common], help="Lie-algebra rank report")
    la.add_argument("model")
    la.set_defaults(func=cmd_larc)

    g = sub.add_parser("generic", parents=[common], help="rate-graph equivalence report")
    g.add_argument("rates")
    g.set_defaults(func=cmd_generic)

    sub.add_parser("examples", help="list built-in models").set_defaults(func=cmd_examples)

    st = sub.add_parser("selftest", help="run the acceptance criteria")
    st.add_argument("--only", type=int, action="append", help="run only this criterion (repeatable)")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "simulate" and args.xi is None:
        parser.error("simulate needs --xi")
    try:
        return args.func(args)
    except InternalError as exc:
        print(f"theorem violation: {exc}", file=sys.stderr)
        if exc.witness is not None:
            print(f"witness: {np.array2string(np.asarray(exc.witness), precision=6)}", file=sys.stderr)
        return EXIT_VIOLATION
    except (UsageError, QmsError, KeyError) as exc:
        print(f"qmsirr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
