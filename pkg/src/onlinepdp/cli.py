"""Command line experiment runner.

``onlinepdp run`` simulates an online policy on generated or loaded
instances, computes the offline optimum, and reports ``TTL/OPT`` against
the proven competitive bound. ``onlinepdp gen`` writes instance files.

Exit status of ``run``: 0 when every bound holds, 1 on a violation, and 2
for usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import mean
from typing import Optional

from . import instances as gen
from .core import CIRCUIT, LINE, Instance, fraction_to_json, total_tour_length, validate_schedule
from .elevator_offline import elevator_opt, elevator_opt_cost
from .elevator_online import main_policy
from .sim import run as simulate
from .tram_offline import opt_tram_cost, opt_tram_schedule
from .tram_online import sif_e_policy, sif_l_policy, sif_m_policy, sir_policy

TRAM = "tram"
ELEVATOR = "elevator"
MODES = {TRAM: CIRCUIT, ELEVATOR: LINE}
ALGORITHMS = ("sir", "sif-m", "sif-e", "sif-l", "main", "opt")
POLICIES = {
    "sir": sir_policy,
    "sif-m": sif_m_policy,
    "sif-e": sif_e_policy,
    "sif-l": sif_l_policy,
    "main": main_policy,
}
ALLOWED_SCENARIOS = {
    "sif-m": {gen.MORNING},
    "sif-e": {gen.EVENING},
    "sif-l": {gen.MORNING, gen.EVENING, gen.LUNCH},
}

ROW_FIELDS = ("instance", "algorithm", "scenario", "m", "cap", "ttl", "opt", "ratio", "c",
              "bound_satisfied")
AGG_FIELDS = ("algorithm", "scenario", "m", "cap", "instances", "mean_ratio", "max_ratio",
              "all_satisfied")


class UsageError(ValueError):
    pass


def competitive_bound(algorithm: str, scenario: str, inst: Instance) -> Fraction:
    cap = inst.fleet.capacity
    size = inst.topology.total_length
    if algorithm == "opt":
        return Fraction(1)
    if algorithm in ("sif-m", "sif-e"):
        return Fraction(1)
    if algorithm == "sif-l":
        return Fraction(2)
    if scenario == gen.GENERAL:
        return (cap * size) if algorithm == "sir" else (2 * cap * size)
    if scenario == gen.LUNCH:
        return Fraction(2 * cap)
    return Fraction(cap)


def fmt2(x: Fraction) -> str:
    """Round half up to two decimals without going through floats."""
    hundredths = (Fraction(x) * 100 + Fraction(1, 2)).__floor__()
    sign = "-" if hundredths < 0 else ""
    hundredths = abs(hundredths)
    return f"{sign}{hundredths // 100}.{hundredths % 100:02d}"


@dataclass(frozen=True)
class Row:
    instance: str
    algorithm: str
    scenario: str
    m: int
    cap: int
    ttl: Fraction
    opt: Fraction
    ratio: Fraction
    c: Fraction
    bound_satisfied: bool

    def sort_key(self):
        return (self.algorithm, self.scenario, self.m, self.cap, self.instance)

    def as_dict(self) -> dict:
        return {
            "instance": self.instance,
            "algorithm": self.algorithm,
            "scenario": self.scenario,
            "m": self.m,
            "cap": self.cap,
            "ttl": fraction_to_json(self.ttl),
            "opt": fraction_to_json(self.opt),
            "ratio": fmt2(self.ratio),
            "c": fraction_to_json(self.c),
            "bound_satisfied": self.bound_satisfied,
        }


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)

    @property
    def all_satisfied(self) -> bool:
        return all(r.bound_satisfied for r in self.rows)

    def aggregates(self) -> list:
        groups = {}
        for r in self.rows:
            groups.setdefault((r.algorithm, r.scenario, r.m, r.cap), []).append(r)
        out = []
        for (alg, sc, m, cap), rows in sorted(groups.items()):
            ratios = [r.ratio for r in rows]
            out.append({
                "algorithm": alg,
                "scenario": sc,
                "m": m,
                "cap": cap,
                "instances": len(rows),
                "mean_ratio": fmt2(mean(ratios)),
                "max_ratio": fmt2(max(ratios)),
                "all_satisfied": all(r.bound_satisfied for r in rows),
            })
        return out

    def to_json(self) -> str:
        data = {"rows": [r.as_dict() for r in self.rows], "aggregates": self.aggregates()}
        return json.dumps(data, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in self.rows:
            w.writerow([_cell(r.as_dict()[k]) for k in ROW_FIELDS])
        w.writerow([])
        w.writerow(AGG_FIELDS)
        for a in self.aggregates():
            w.writerow([_cell(a[k]) for k in AGG_FIELDS])
        return buf.getvalue()


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def parse_csv_report(text: str) -> dict:
    """Inverse of :meth:`ExperimentReport.to_csv`, typed like the JSON form."""
    rows_part, _, agg_part = text.partition("\n\n")

    def typed(rec: dict, ints, bools) -> dict:
        out = dict(rec)
        for k in ints:
            out[k] = int(out[k])
        for k in bools:
            out[k] = out[k] == "true"
        for k in ("ttl", "opt", "c"):
            if k in out and "/" not in out[k]:
                out[k] = int(out[k])
        return out

    rows = [typed(r, ("m", "cap"), ("bound_satisfied",)) for r in csv.DictReader(io.StringIO(rows_part))]
    aggs = [typed(a, ("m", "cap", "instances"), ("all_satisfied",))
            for a in csv.DictReader(io.StringIO(agg_part))]
    return {"rows": rows, "aggregates": aggs}


def check_compatible(algorithm: str, inst: Instance, scenario: str) -> None:
    kind = inst.topology.kind
    if algorithm == "main":
        if kind != LINE:
            raise UsageError("main runs in elevator mode on a line")
        if inst.fleet.num_vehicles != 1:
            raise UsageError("main drives exactly one vehicle (--vipas 1)")
    elif algorithm in POLICIES and kind != CIRCUIT:
        raise UsageError(f"{algorithm} runs in tram mode on a circuit")
    allowed = ALLOWED_SCENARIOS.get(algorithm)
    if allowed is not None and scenario not in allowed:
        raise UsageError(f"{algorithm} needs a {'/'.join(sorted(allowed))} instance, got {scenario}")
    if algorithm == "opt" and kind == LINE and inst.fleet.num_vehicles != 1:
        raise UsageError("the elevator optimum is defined for one vehicle (--vipas 1)")


def offline_optimum(inst: Instance) -> Fraction:
    topo, sigma, fleet = inst.parts()
    if topo.is_circuit:
        return opt_tram_cost(sigma, topo, fleet)
    return elevator_opt_cost(sigma, topo, fleet)


def evaluate(inst: Instance, algorithm: str) -> Row:
    """Run one algorithm on one instance and compare with the optimum."""
    topo, sigma, fleet = inst.parts()
    scenario = gen.classify_scenario(inst)
    opt = offline_optimum(inst)
    if algorithm == "opt":
        if topo.is_circuit:
            schedule = opt_tram_schedule(sigma, topo, fleet)
            transfers = False
        else:
            schedule = elevator_opt(sigma, topo, fleet)[1]
            transfers = True
    else:
        schedule = simulate(POLICIES[algorithm](), topo, sigma, fleet)
        transfers = False
    report = validate_schedule(schedule, sigma, topo, fleet, allow_transfers=transfers)
    if not report.ok:
        raise RuntimeError(f"{algorithm} produced an invalid schedule on {inst.name}:\n{report}")
    ttl = total_tour_length(schedule)
    ratio = Fraction(1) if opt == 0 and ttl == 0 else Fraction(ttl) / opt
    c = competitive_bound(algorithm, scenario, inst)
    return Row(inst.name, algorithm, scenario, len(sigma), fleet.capacity, ttl, opt, ratio, c, ratio <= c)


def _evaluate_job(job) -> Row:
    inst_dict, algorithm = job
    return evaluate(Instance.from_dict(inst_dict), algorithm)


def _mode_for(args) -> str:
    if args.mode:
        return args.mode
    if args.algorithm == "main" or (args.adversary in gen.LINE_FAMILIES):
        return ELEVATOR
    return TRAM


def build_instances(args) -> list:
    if args.infile:
        inst = gen.load_instance(args.infile)
        if args.mode and MODES[args.mode] != inst.topology.kind:
            raise UsageError(f"--mode {args.mode} does not match the {inst.topology.kind} in {args.infile}")
        return [inst]
    mode = _mode_for(args)
    if args.adversary:
        if args.scenario:
            raise UsageError("use either --scenario or --adversary")
        family_kind = LINE if args.adversary in gen.LINE_FAMILIES else CIRCUIT
        if MODES[mode] != family_kind:
            raise UsageError(f"adversary {args.adversary} does not run in {mode} mode")
        n = args.n if args.n is not None else (5 if family_kind == LINE else 3)
        return [gen.gen_adversary(gen.AdversaryParams(args.adversary, args.cap, n, args.l))]
    if not args.scenario:
        raise UsageError("one of --scenario, --adversary or --in is required")
    n = args.n if args.n is not None else 4
    out = []
    for i in range(args.instances):
        spec = gen.ScenarioSpec(args.scenario, MODES[mode], n, args.m, args.zmax, args.seed + i,
                                args.cap, args.vipas, args.edge_length)
        out.append(gen.gen_scenario(spec))
    return out


def cmd_run(args) -> ExperimentReport:
    insts = build_instances(args)
    for inst in insts:
        check_compatible(args.algorithm, inst, gen.classify_scenario(inst))
    jobs = [(inst.to_dict(), args.algorithm) for inst in insts]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_evaluate_job, jobs))
    else:
        rows = [_evaluate_job(j) for j in jobs]
    rows.sort(key=Row.sort_key)
    return ExperimentReport(rows)


def cmd_gen(args) -> Instance:
    insts = build_instances(args)
    if len(insts) != 1:
        raise UsageError("gen writes one instance; drop --instances")
    return insts[0]


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonnegative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return value


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=sorted(MODES), help="tram (circuit) or elevator (line)")
    p.add_argument("--scenario", choices=gen.SCENARIOS, help="random scenario to generate")
    p.add_argument("--adversary", choices=gen.FAMILIES, help="worst-case family to generate")
    p.add_argument("--cap", type=_positive, default=3, help="vehicle capacity (default 3)")
    p.add_argument("--vipas", type=_positive, default=1, help="number of vehicles (default 1)")
    p.add_argument("--m", type=_nonnegative, default=10, help="requests per random instance")
    p.add_argument("--n", type=_positive, default=None, help="index of the last node")
    p.add_argument("--l", type=_positive, default=1, help="oscillation blocks for main-general")
    p.add_argument("--zmax", type=_positive, default=1, help="largest load of a random request")
    p.add_argument("--edge-length", type=_positive, default=1, dest="edge_length",
                   help="length of every edge in random instances")
    p.add_argument("--seed", type=int, default=0, help="seed of the first random instance")
    p.add_argument("--in", dest="infile", help="read the instance from this JSON file")
    p.add_argument("--out", help="write the output here instead of stdout")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onlinepdp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="compare an algorithm against the offline optimum")
    run_p.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    _add_instance_flags(run_p)
    run_p.add_argument("--instances", type=_positive, default=1, help="number of random instances")
    run_p.add_argument("--format", choices=("csv", "json"), default="csv")
    run_p.add_argument("--workers", type=_positive, default=1, help="parallel worker processes")

    gen_p = sub.add_parser("gen", help="write an instance file")
    gen_p.add_argument("--algorithm", choices=ALGORITHMS, default=None, help=argparse.SUPPRESS)
    _add_instance_flags(gen_p)
    gen_p.set_defaults(instances=1)
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            _emit(cmd_gen(args).to_json(), args.out)
            return 0
        report = cmd_run(args)
    except (UsageError, ValueError) as exc:
        parser.error(str(exc))
    _emit(report.to_json() if args.format == "json" else report.to_csv(), args.out)
    return 0 if report.all_satisfied else 1


if __name__ == "__main__":
    sys.exit(main())
