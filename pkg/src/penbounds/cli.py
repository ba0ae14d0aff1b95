"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 size limit or unsupported input,
3 a verification check failed. Structured output is one JSON document;
human output is rendered from that same document.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from penbounds import bb84, bounds, gme, packing
from penbounds.errors import InputError, LimitError, PenError, UnsupportedError
from penbounds.network import DenseMixed, PenNetwork, derive_weights, read_network

DEFAULT_SEED = packing.DEFAULT_SEED
COMMANDS = ("bounds", "simulate", "verify-gme", "bb84", "report")


@dataclass(frozen=True)
class RunConfig:
    command: str
    network: str | None = None
    seekers: tuple[int, ...] | None = None
    seed: int = DEFAULT_SEED
    rounds: int = 1
    output_format: str = "human"
    reference: int = 1
    samples: int = 1000
    trials: int = 1000
    audit_trials: int = 1000
    correlators: tuple[float, ...] | None = None
    state: str | None = None
    resolution: int = 1000


class VerificationFailed(PenError):
    def __init__(self, document: dict):
        super().__init__("verification failed")
        self.document = document


def _load(cfg: RunConfig) -> PenNetwork:
    if not cfg.network:
        raise InputError(f"{cfg.command} needs --network")
    net = read_network(cfg.network)
    if cfg.seekers is not None:
        net = net.with_seekers(cfg.seekers)
    return net


def _weights(net: PenNetwork):
    if any(isinstance(e.state, DenseMixed) for e in net.edges):
        return derive_weights(net, "eof_EF")
    return derive_weights(net, "entropy_S")


def _network_summary(net: PenNetwork) -> dict:
    return {
        "n_vertices": net.n_vertices,
        "n_edges": len(net.edges),
        "seekers": sorted(net.seekers),
        "is_tree": net.is_tree(),
    }


def cmd_bounds(cfg: RunConfig) -> dict:
    net = _load(cfg)
    w = _weights(net)
    reports = [bounds.weakest_cut_bound(net, w), bounds.partition_bound(net, w)]
    skipped = []
    try:
        reports.append(bounds.devetak_winter_bound(net, cfg.reference))
    except UnsupportedError as exc:
        skipped.append({"bound_kind": "devetak_winter", "reason": str(exc)})
    if net.is_tree():
        reports.append(bounds.tree_exact_rate(net, w))
    return {
        "command": "bounds",
        "network": _network_summary(net),
        "weights": w.kind,
        "bounds": [r.to_dict() for r in reports],
        "skipped": skipped,
    }


def cmd_simulate(cfg: RunConfig) -> dict:
    net = _load(cfg)
    if not net.all_seekers:
        raise UnsupportedError("simulate needs every vertex to be a secrecy-seeking vertex")
    pk = packing.pack_trees_integer(net, cfg.rounds)
    transcript = packing.simulate_conference_key(net, pk, cfg.seed)
    runs = [transcript] + [
        packing.simulate_conference_key(net, pk, cfg.seed + k) for k in range(1, cfg.audit_trials)
    ]
    audit = packing.audit_secrecy(runs)
    bound = bounds.partition_bound(net, derive_weights(net, "entropy_S"), cross_check=False)
    rate = Fraction(len(pk.trees), cfg.rounds)
    gap = Fraction(bound.value) - rate if bound.exact else float(bound.value) - float(rate)
    doc = {
        "command": "simulate",
        "network": _network_summary(net),
        "rounds": cfg.rounds,
        "key_bits": len(pk.trees),
        "rate": float(rate),
        "rate_exact": str(rate),
        "partition_bound": bound.to_dict(),
        "gap": float(gap),
        "transcript": transcript.to_dict(),
        "audit": audit.to_dict(),
    }
    if not audit.passed:
        raise VerificationFailed(doc)
    return doc


def cmd_verify_gme(cfg: RunConfig) -> dict:
    net = _load(cfg)
    identity = gme.verify_gme_identity(net, cfg.samples, cfg.seed)
    doc = {"command": "verify-gme", "network": _network_summary(net), "identity": identity.to_dict()}
    ok = identity.passed
    try:
        deriv = gme.directional_derivative_check(net, cfg.trials, cfg.seed)
        doc["derivative"] = deriv.to_dict()
        ok = ok and deriv.passed
    except UnsupportedError as exc:
        doc["derivative"] = {"skipped": str(exc)}
    try:
        checks = [
            gme.total_correlation_check(net, p)
            for p in bounds.enumerate_proper_partitions(net.n_vertices, net.seekers)
        ]
        doc["total_correlation"] = [c.to_dict() for c in checks]
        ok = ok and all(c.holds for c in checks)
    except LimitError as exc:
        doc["total_correlation"] = {"skipped": str(exc)}
    doc["passed"] = ok
    if not ok:
        raise VerificationFailed(doc)
    return doc


def cmd_bb84(cfg: RunConfig) -> dict:
    if cfg.correlators is not None and cfg.state is not None:
        raise InputError("give either --correlators or --state, not both")
    if cfg.correlators is None and cfg.state is None:
        ceil = bb84.bb84_ceiling_search(cfg.resolution)
        return {
            "command": "bb84",
            "mode": "ceiling",
            "resolution": cfg.resolution,
            "ceiling": ceil.value,
            "correlators": ceil.correlators.as_dict(),
        }
    if cfg.state is not None:
        states = {"ghz": bb84.ghz_state, "bell-mixture": bb84.bell_mixture_state}
        if cfg.state not in states:
            raise InputError(f"unknown state {cfg.state!r}; choose from {sorted(states)}")
        c = bb84.correlators_from_state(states[cfg.state]())
    else:
        vals = cfg.correlators
        if len(vals) not in (3, 5):
            raise InputError("--correlators takes xxx,zab,zac or xxx,zab,zac,zb,zc")
        c = bb84.CorrelatorSet(*vals)
    feas = bb84.pen3_feasible(c)
    return {
        "command": "bb84",
        "mode": "evaluate",
        "correlators": c.as_dict(),
        "rate": bb84.bb84_rate(c),
        "pen3_feasible": feas.feasible,
        "inflation_slack": feas.inflation_slack,
        "combined_slack": feas.combined_slack,
        "flag": None if feas.feasible else "infeasible in PEN-3",
    }


def cmd_report(cfg: RunConfig) -> dict:
    doc = cmd_bounds(cfg)
    doc["command"] = "report"
    net = _load(cfg)
    if net.all_seekers:
        try:
            frac = packing.pack_trees_fractional(net, _weights(net))
            doc["fractional_packing"] = {"value": frac.value, "trees": len(frac.trees)}
        except LimitError as exc:
            doc["fractional_packing"] = {"skipped": str(exc)}
    return doc


HANDLERS: dict[str, Callable[[RunConfig], dict]] = {
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "verify-gme": cmd_verify_gme,
    "bb84": cmd_bb84,
    "report": cmd_report,
}


# --- rendering ---------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def render_human(doc: dict) -> str:
    lines = [f"# {doc['command']}"]
    if "network" in doc:
        n = doc["network"]
        lines.append(
            f"network: {n['n_vertices']} vertices, {n['n_edges']} edges, seekers {n['seekers']}"
            + (", tree" if n["is_tree"] else "")
        )
    for b in doc.get("bounds", []):
        val = b["exact"] if b["exact"] is not None else _fmt(b["value"])
        lines.append(f"{b['bound_kind']:<16} {val:>12}  witness={_witness(b['witness'])}")
        for note in b["notes"]:
            lines.append(f"{'':<16} note: {note}")
    for s in doc.get("skipped", []):
        lines.append(f"{s['bound_kind']:<16} {'n/a':>12}  {s['reason']}")
    if "fractional_packing" in doc:
        fp = doc["fractional_packing"]
        lines.append(f"fractional packing: {_fmt(fp.get('value', fp.get('skipped')))}")
    if doc["command"] == "simulate":
        lines.append(f"rounds {doc['rounds']}: {doc['key_bits']} conference bits, rate {doc['rate_exact']}")
        lines.append(f"partition bound {_fmt(doc['partition_bound']['value'])}, gap {_fmt(doc['gap'])}")
        lines.append(f"keys: {doc['transcript']['keys']}")
        a = doc["audit"]
        lines.append(f"audit: {'pass' if a['passed'] else 'FAIL'} over {a['trials']} runs")
        lines += [f"  {v}" for v in a["violations"][:10]]
    if doc["command"] == "verify-gme":
        i = doc["identity"]
        lines.append(f"D(rho||sigma*) = {_fmt(i['identity_value'])}, weakest cut = {_fmt(i['weakest_cut'])}")
        lines.append(f"sampled minimum {_fmt(i['min_sampled'])} over {i['samples']} samples: {i['message']}")
        d = doc["derivative"]
        if "skipped" in d:
            lines.append(f"derivative check skipped: {d['skipped']}")
        else:
            lines.append(
                f"max |1-f'(0)| = {_fmt(d['max_abs_one_minus_fprime'])}, "
                f"closed vs quadrature {d['max_closed_vs_quadrature']:.2e}"
            )
        tc = doc["total_correlation"]
        if isinstance(tc, dict):
            lines.append(f"total correlation skipped: {tc['skipped']}")
        else:
            good = sum(c["holds"] for c in tc)
            lines.append(f"total correlation: {good}/{len(tc)} partitions match")
        lines.append("PASS" if doc["passed"] else "FAIL")
    if doc["command"] == "bb84":
        if doc["mode"] == "ceiling":
            lines.append(f"ceiling {_fmt(doc['ceiling'])} at {doc['correlators']}")
        else:
            lines.append(f"correlators {doc['correlators']}")
            lines.append(f"rate {_fmt(doc['rate'])}")
            lines.append("feasible in PEN-3" if doc["pen3_feasible"] else doc["flag"])
    return "\n".join(lines)


def _witness(w) -> str:
    if w is None:
        return "-"
    if w["type"] == "cut":
        return f"side {w['side']} edges {w['edges']}"
    if w["type"] == "partition":
        return "|".join(",".join(map(str, b)) for b in w["blocks"])
    return f"{w['type']} {w['index']}"


def render(doc: dict, output_format: str) -> str:
    if output_format == "structured":
        return json.dumps(doc, sort_keys=True, indent=2)
    return render_human(doc)


# --- argument parsing --------------------------------------------------------------


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="penbounds", description="Conference key bounds for pair-entangled networks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--network", help="network JSON file")
    p.add_argument("--seekers", type=_int_list, help="override secrecy-seeking vertices, e.g. 1,2,3")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED, help="default 0x5EED")
    p.add_argument("--format", dest="output_format", choices=("human", "structured"), default="human")
    p.add_argument("--reference", type=int, default=1, help="reference vertex for the DW bound")
    p.add_argument("--samples", type=int, default=1000, help="biseparable samples for verify-gme")
    p.add_argument("--trials", type=int, default=1000, help="derivative directions for verify-gme")
    p.add_argument("--audit-trials", type=int, default=1000, help="simulation runs for the secrecy audit")
    p.add_argument("--correlators", type=_float_list, help="bb84: xxx,zab,zac[,zb,zc]")
    p.add_argument("--state", help="bb84: named state (ghz, bell-mixture)")
    p.add_argument("--resolution", type=int, default=1000, help="bb84 ceiling grid resolution")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    cfg = RunConfig(**vars(args))
    try:
        doc = HANDLERS[cfg.command](cfg)
    except VerificationFailed as exc:
        print(render(exc.document, cfg.output_format))
        return 3
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (LimitError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(render(doc, cfg.output_format))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
