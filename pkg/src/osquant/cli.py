"""Command-line front end.  Every run writes one JSON report.

Exit codes: 0 all verdicts hold, 1 a verdict is falsified, 2 inconclusive,
3 input error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys

import numpy as np

from . import cbmaps, chu, hsduality, opspace, switch, tensors
from .numerics import OptimizerConfig, cmatrix_from_json, vector_from_json

EXIT_OK, EXIT_FALSIFIED, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"command line: {message}")


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------


def _load_input(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: line 1, column 1: top-level value must be an object")
    return data


def _field(data: dict, key: str, where: str = "input"):
    if key not in data:
        raise InputError(f"{where}: missing field '{key}'")
    return data[key]


def _guard(where: str, fn, *args):
    try:
        return fn(*args)
    except InputError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def _channel_from(data: dict, rng: np.random.Generator) -> hsduality.Channel:
    if "preset" in data:
        name, d = data["preset"], int(data.get("d", 2))
        if name == "identity":
            return hsduality.identity_channel(d)
        if name == "transpose":
            return hsduality.transpose_channel(d)
        if name == "random":
            return hsduality.random_cptp(rng, d, int(data.get("dOut", d)))
        if name == "measure":
            return hsduality.measure_basis(d)
        raise InputError(f"input.channel.preset: unknown preset '{name}'")
    return _guard("input.channel", hsduality.Channel.from_json, data)


def _cbmap_from(data: dict) -> cbmaps.CBMap:
    if "preset" in data:
        name, k = data["preset"], int(data.get("k", 2))
        if name == "transpose":
            return cbmaps.transpose_map(k)
        if name == "identity":
            return cbmaps.identity_map(opspace.matrix_space(k))
        raise InputError(f"input.map.preset: unknown preset '{name}'")
    return _guard("input.map", cbmaps.CBMap.from_json, data)


def _bilinear_from(data: dict) -> tensors.BilinearMap:
    name = data.get("preset")
    if name == "switch":
        return switch.build_switch(int(data.get("dim", 2))).bilinear
    if name == "multiplication":
        return tensors.multiplication_map(int(data.get("k", 2)))
    if name is not None:
        raise InputError(f"input.bilinear.preset: unknown preset '{name}'")

    def build():
        return tensors.BilinearMap(opspace.space_from_json(data["left"]), opspace.space_from_json(data["right"]),
                                   opspace.space_from_json(data["target"]), cmatrix_from_json(data["coeffs"]))

    return _guard("input.bilinear", build)


def _estimate_status(est, claim_bound: float | None, tol: float) -> str:
    if claim_bound is None:
        return "holds"
    if est.lower > claim_bound + tol:
        return "fails"
    if est.upper <= claim_bound + tol:
        return "holds"
    return "inconclusive"


# ---------------------------------------------------------------------------
# subcommands; each returns (result, verdicts)
# ---------------------------------------------------------------------------


def cmd_norm(args, data, config):
    space = _guard("input.space", opspace.space_from_json, _field(data, "space"))
    x = _guard("input.element", opspace.element_from_json, _field(data, "element"), space.dim)
    est = space.norm(x, config)
    return {"estimate": est.to_json()}, [{"claim": "norm interval computed", "status": "holds"}]


def cmd_cbnorm(args, data, config):
    u = _cbmap_from(_field(data, "map"))
    est = cbmaps.cb_norm_lower(u, args.max_level, config)
    verdicts = []
    bound = data.get("claimBound")
    if bound is not None:
        status = _estimate_status(est, float(bound), args.tol_opt)
        verdicts.append({"claim": f"cb norm <= {bound}", "status": status})
    else:
        verdicts.append({"claim": "cb norm interval computed", "status": "holds"})
    return {"estimate": est.to_json(), "smithLevel": cbmaps.smith_level(u)}, verdicts


def cmd_tensor_norm(args, data, config):
    left = _guard("input.left", opspace.space_from_json, _field(data, "left"))
    right = _guard("input.right", opspace.space_from_json, _field(data, "right"))
    v = _guard("input.element", vector_from_json, _field(data, "element"))
    if v.size != left.dim * right.dim:
        raise InputError(f"input.element: expected {left.dim * right.dim} coordinates, got {v.size}")
    if args.kind == "proj":
        est = tensors.projective_norm(left, right, v, config)
    else:
        est = _guard("input", tensors.haagerup_norm, left, right, v, config)
    return {"kind": args.kind, "estimate": est.to_json()}, [{"claim": "norm interval computed", "status": "holds"}]


def cmd_bilinear(args, data, config):
    u = _bilinear_from(_field(data, "bilinear"))
    if args.command == "jcb":
        est = tensors.jcb_norm(u, args.max_level, config)
        claim = "jointly completely contractive"
    else:
        est = tensors.mb_norm(u, args.max_level, config)
        claim = "multiplicatively contractive"
    status = _estimate_status(est, 1.0, args.tol_opt)
    return {"estimate": est.to_json()}, [{"claim": claim, "status": status,
                                           "reason": "lower bound only; no violation found" if status == "inconclusive"
                                           else ""}]


def cmd_channel(args, data, config):
    rng = np.random.default_rng(args.seed)
    phi = _channel_from(_field(data, "channel"), rng)
    if args.action == "check":
        checks = {
            "completelyPositive": hsduality.is_completely_positive(phi),
            "tracePreserving": hsduality.is_trace_preserving(phi),
            "unital": hsduality.is_unital(phi),
            "positive": hsduality.is_positive(phi, config),
        }
        result = {"channel": phi.to_json(), "checks": {k: v.to_json() for k, v in checks.items()}}
        return result, [{"claim": k, "status": v.status} for k, v in checks.items()]
    if args.action == "transpose":
        psi = hsduality.transpose(phi)
        return {"channel": phi.to_json(), "transpose": psi.to_json()}, [{"claim": "transpose computed",
                                                                          "status": "holds"}]
    suite = hsduality.hs_correspondence_suite(phi, config, levels=tuple(range(1, min(args.max_level, 2) + 1)))
    verdicts = [{"claim": "CP iff CP of the transpose", "status": _agree(suite["cp"])},
                {"claim": "TP iff unital transpose", "status": _agree(suite["tpUnital"])},
                {"claim": "matching cb lower bounds", "status": _agree(suite["cbLower"])},
                {"claim": "CPTP iff normal CP unital", "status": _agree(suite["cptpNcpu"])},
                {"claim": "pairing identity on bases",
                 "status": "holds" if suite["pairingDefect"] <= 1e-10 else "fails"}]
    return {"channel": phi.to_json(), "suite": _jsonable(suite)}, verdicts


def _agree(entry) -> str:
    if isinstance(entry, dict) and "agree" in entry:
        return "holds" if entry["agree"] else "fails"
    return "holds" if entry else "fails"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return obj


def cmd_switch(args, data, config):
    s = _guard("--dim", switch.build_switch, args.dim)
    n = args.n if args.n is not None else args.dim
    rep = _guard("--n", switch.switch_mb_witness, s, n)
    status = "holds" if abs(rep["mbLower"] - n) <= args.tol_alg else "fails"
    return rep, [{"claim": f"mb norm >= {n} via explicit witness", "status": status}]


def cmd_chu(args, data, config):
    if args.action == "interpret":
        text = args.formula or data.get("formula")
        if not text:
            raise InputError("chu interpret: missing --formula")
        try:
            _, rep = chu.polarity_report(text, config)
        except chu.PolarityError as exc:
            raise InputError(str(exc)) from exc
        except ValueError as exc:
            raise InputError(f"formula: {exc}") from exc
        return rep, [{"claim": "well-polarized interpretation", "status": "holds"}]
    rng = np.random.default_rng(args.seed)
    d = int(data.get("d", 2))
    phi = _channel_from(_field(data, "channel"), rng)
    if phi.dim_in != d or phi.dim_out != d:
        raise InputError(f"input.channel: expected a channel on dimension {d}")
    m = chu.from_channel(phi)
    if "backward" in data:
        g = _channel_from(data["backward"], rng)
        m = chu.ChuMorphism(m.forward, hsduality.as_cbmap(g, hsduality.HEISENBERG))
    eps = float(data.get("perturb", 0.0))
    if eps:
        noise = rng.standard_normal(m.backward.coeffs.shape)
        m = chu.ChuMorphism(m.forward, cbmaps.CBMap(m.backward.domain, m.backward.codomain,
                                                    m.backward.coeffs + eps * noise))
    obj = chu.hs_object(d)
    v = chu.morphism_valid(m, obj, obj, config, min(args.max_level, 2))
    return {"object": obj.to_json(), "morphism": v.to_json()}, [{"claim": "Chu morphism", "status": v.status}]


def default_axiom_spaces():
    m2 = opspace.matrix_space(2)
    return {
        "matrix(2)": m2,
        "traceClass(2)": opspace.trace_class(2),
        "columnHilbert(3)": opspace.column_hilbert(3),
        "min(M_2)": opspace.min_of(m2),
        "max(M_2)": opspace.max_of(m2),
        "sum1(M_2, H_c(2))": opspace.direct_sum_1([m2, opspace.column_hilbert(2)]),
        "sumInf(M_2, T_2)": opspace.direct_sum_inf([m2, opspace.trace_class(2)]),
        "M_2 / span(e_11)": opspace.quotient_space(m2, np.eye(4)[[0]]),
    }


def cmd_verify_axioms(args, data, config):
    if "space" in data:
        spaces = {"input": _guard("input.space", opspace.space_from_json, data["space"])}
    else:
        spaces = default_axiom_spaces()
    samples = int(data.get("samples", args.samples))
    reports, verdicts = {}, []
    for name, sp in spaces.items():
        r = opspace.check_axioms(sp, samples, max(args.max_level, 2), config, args.seed)
        reports[name] = r.to_json()
        verdicts.append({"claim": f"M1 and M2 on {name}", "status": "holds" if r.holds else "fails"})
    return {"spaces": reports}, verdicts


LABELS = {
    "norm": "matrix norm oracle",
    "cbnorm": "completely bounded norm",
    "tensor-norm": "projective / Haagerup tensor norm",
    "jcb": "jointly completely bounded norm",
    "mb": "multiplicatively bounded norm",
    "channel": "channel predicates and transpose correspondence",
    "switch": "switch obstruction to Haagerup factorization",
    "chu": "Chu objects and morphisms",
    "verify-axioms": "operator-space axioms M1/M2",
}


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-level", type=int, default=3)
    common.add_argument("--restarts", type=int, default=16)
    common.add_argument("--tol-alg", type=float, default=1e-9)
    common.add_argument("--tol-opt", type=float, default=1e-6)
    common.add_argument("--input", default=None)
    common.add_argument("--output", default=None)
    common.add_argument("--no-timestamp", action="store_true")

    p = _Parser(prog="osquant", description="Operator-space computations for quantum maps.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("norm", parents=[common])
    sub.add_parser("cbnorm", parents=[common])
    tn = sub.add_parser("tensor-norm", parents=[common])
    tn.add_argument("--kind", choices=["proj", "haag"], default="proj")
    sub.add_parser("jcb", parents=[common])
    sub.add_parser("mb", parents=[common])
    ch = sub.add_parser("channel", parents=[common])
    ch.add_argument("action", choices=["check", "transpose", "hs-suite"])
    sw = sub.add_parser("switch", parents=[common])
    sw.add_argument("action", choices=["demo"])
    sw.add_argument("--dim", type=int, default=2)
    sw.add_argument("--n", type=int, default=None)
    cu = sub.add_parser("chu", parents=[common])
    cu.add_argument("action", choices=["check", "interpret"])
    cu.add_argument("--formula", default=None)
    va = sub.add_parser("verify-axioms", parents=[common])
    va.add_argument("--samples", type=int, default=50)
    return p


HANDLERS = {
    "norm": cmd_norm, "cbnorm": cmd_cbnorm, "tensor-norm": cmd_tensor_norm, "jcb": cmd_bilinear,
    "mb": cmd_bilinear, "channel": cmd_channel, "switch": cmd_switch, "chu": cmd_chu,
    "verify-axioms": cmd_verify_axioms,
}


def _exit_code(verdicts) -> int:
    statuses = {v["status"] for v in verdicts}
    if "fails" in statuses:
        return EXIT_FALSIFIED
    if "inconclusive" in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _write(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def run(argv=None) -> int:
    output = None
    try:
        args = build_parser().parse_args(argv)
        output = args.output
        if args.restarts < 1 or args.max_level < 1:
            raise InputError("--restarts and --max-level must be >= 1")
        try:
            config = OptimizerConfig(seed=args.seed, restarts=args.restarts)
        except ValueError as exc:
            raise InputError(f"--seed: {exc}") from exc
        data = _load_input(args.input)
        result, verdicts = HANDLERS[args.command](args, data, config)
        report = {
            "command": args.command,
            "label": LABELS[args.command],
            "input": data,
            "config": {**config.to_json(), "maxLevel": args.max_level, "tolAlg": args.tol_alg,
                       "tolOpt": args.tol_opt},
            "result": _jsonable(result),
            "verdicts": verdicts,
        }
        for key in ("action", "kind", "dim", "n", "formula"):
            if getattr(args, key, None) is not None:
                report.setdefault("arguments", {})[key] = getattr(args, key)
        if not args.no_timestamp:
            report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        code = _exit_code(verdicts)
        report["exitCode"] = code
        _write(report, args.output)
        return code
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        try:
            _write({"error": str(exc), "exitCode": EXIT_INPUT}, output)
        except OSError:
            pass
        return EXIT_INPUT


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
