"""Command line entry point: ``qsnet run|verify|table``.

Exit codes: 0 success, 2 schema or usage error, 3 estimation failure,
4 capacity error, 1 failed verification suite.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds, fisher, probes, suites
from .config import Scenario, SchemaError, load
from .netspace import (
    JZ,
    NUMBER,
    CapacityError,
    NetworkLayout,
    NetworkState,
    SensorSpace,
    resource_expectation,
)

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_ESTIMATION, EXIT_CAPACITY = 0, 1, 2, 3, 4


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def build_layout(s: Scenario) -> NetworkLayout:
    n = s.network
    if n.sensor == "qubits":
        sensor, gen = SensorSpace.qubits(n.n_max, n.fixed), JZ
    else:
        if n.fixed:
            raise SchemaError("network.fixed applies to qubit sensors only")
        sensor, gen = SensorSpace.mode(n.n_max), NUMBER
    return NetworkLayout.uniform(sensor, n.count, gen, n_ancilla=n.references)


def build_state(s: Scenario, layout: NetworkLayout) -> NetworkState:
    p, fam = s.probe.params, s.probe.family
    if fam == "GHZ":
        return probes.ghz(layout, p["n"])
    if fam == "WeightedGHZ":
        return probes.weighted_ghz(layout, [int(x) for x in p["w"]])
    if fam == "ProportionalGHZ":
        return probes.proportional_ghz(layout, p["v"], p["N"])
    if fam == "LocalNO":
        return probes.local_superposition(layout, [int(x) for x in p["w"]])
    if fam == "UNS":
        return probes.uns(layout, p["N"])
    if fam == "NOON":
        return probes.noon(layout, p["N"])
    if fam == "GNS":
        return probes.gns(layout, p["N"], float(p.get("gamma", 1.0)))
    if fam == "BalancedGNS":
        return probes.gns(layout, p["N"], 1.0)
    if fam == "Product":
        return NetworkState.product(layout, [np.asarray(a, float) for a in p["amplitudes"]])
    amps = np.asarray(p["amplitudes"], float)
    if amps.ndim != 2 or amps.shape[1] != 2:
        raise SchemaError("Custom amplitudes are [re, im] pairs")
    return NetworkState.from_vector(amps[:, 0] + 1j * amps[:, 1], layout)


def task_setup(s: Scenario, d: int):
    """(M or None, weighting) for the scenario's task."""
    t = s.task
    if t.kind == "SingleFunction":
        v = np.asarray(t.params["v"], float)
        if v.size != d:
            raise SchemaError("task.v needs one entry per parameter")
        return fisher.LinearReparam.completing(v / np.linalg.norm(v)), fisher.Weighting.unit(d)
    w = t.params.get("W")
    weighting = fisher.Weighting.uniform(d) if w is None else fisher.Weighting(w)
    if weighting.diag.size != d:
        raise SchemaError("task.W needs one entry per parameter")
    if t.kind == "LinearFunctions":
        m = np.asarray(t.params["M"], float)
        if m.shape != (d, d):
            raise SchemaError("task.M must be d x d")
        return fisher.LinearReparam(m), weighting
    return None, weighting


def closed_forms(s: Scenario, layout: NetworkLayout, qfim: fisher.Qfim) -> list[bounds.BoundReport]:
    """Catalog bounds that apply to the scenario as declared."""
    out = []
    gen = layout.generators[0][1]
    lmax, lmin, mu, d = gen.lam_max, gen.lam_min, s.mu, layout.d
    fam, p = s.probe.family, s.probe.params
    v = np.asarray(s.task.params.get("v", []), float)
    if v.size:
        v = v / np.linalg.norm(v)
    even = v.size and np.allclose(v, v[0])
    if fam == "GHZ" and s.task.kind == "SingleFunction" and even:
        n = p["n"]
        out.append(bounds.report("ghz_sum", bounds.ghz_sum(d, n, lmax, lmin, mu), d=d, n=n, mu=mu))
        out.append(bounds.report("local_sum", bounds.local_sum(d, n * d, lmax, lmin, mu), d=d, N_max=n * d, mu=mu))
    if fam in ("WeightedGHZ", "ProportionalGHZ") and s.task.kind == "SingleFunction":
        w = p["w"] if fam == "WeightedGHZ" else probes.proportional_weights(p["v"], p["N"])
        n_max = int(sum(w))
        try:
            out.append(bounds.report("weighted_ghz", bounds.weighted_ghz_bound(v, n_max, lmax, lmin, mu),
                                     v=v.tolist(), N_max=n_max, mu=mu))
        except ValueError:
            pass
        out.append(bounds.report("local_optimal", bounds.local_optimal(v, n_max, lmax, lmin, mu),
                                 v=v.tolist(), N_max=n_max, mu=mu))
    if fam == "LocalNO" and s.task.kind == "SingleFunction":
        w = p["w"]
        out.append(bounds.report("local_weighted", bounds.local_weighted(v, w, sum(w), lmax, lmin, mu),
                                 v=v.tolist(), x=list(w), N_max=sum(w), mu=mu))
    uniform_phi = s.task.kind == "EstimatePhi" and (
        "W" not in s.task.params or np.allclose(s.task.params["W"], 1.0 / d))
    if fam in ("GNS", "BalancedGNS", "UNS") and uniform_phi and s.network.references == 1:
        var = qfim.matrix[0, 0] / 4
        J = qfim.matrix[0, 1] / qfim.matrix[0, 0] if d > 1 else 0.0
        out.append(bounds.report("imaging_symmetric", bounds.imaging_symmetric(var, J, d, mu),
                                 v=var, J=J, d_prime=d, mu=mu))
        if fam == "BalancedGNS" or (fam == "GNS" and p.get("gamma", 1.0) == 1.0):
            out.append(bounds.report("gns", bounds.gns_bound(d, p["N"], lmax, lmin, mu),
                                     d=d, N_max=p["N"], mu=mu))
    if fam == "NOON" and d == 1:
        out.append(bounds.report("noon_individual", bounds.noon_individual(1, p["N"], mu), d_prime=1,
                                 N=p["N"], mu=mu))
    return out


def run_scenario(path: str, out_dir: Path) -> int:
    try:
        s = load(path)
        layout = build_layout(s)
        state = build_state(s, layout)
        m, weighting = task_setup(s, layout.d)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (SchemaError, ValueError, KeyError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    qfim = fisher.qfim_pure_commuting(state) if layout.all_diagonal else fisher.qfim_pure_general(state, np.zeros(layout.d))
    theta = fisher.reparam(qfim, m) if m is not None else qfim
    red = fisher.reduce(theta, weighting)
    report = {
        "probe": s.probe.family,
        "task": s.task.kind,
        "mu": s.mu,
        "parameters": layout.d,
        "resource": resource_expectation(state),
        "qfim": qfim.matrix.tolist(),
        "kept_indices": list(red.kept_indices),
        "discarded_indices": list(red.discarded_indices),
        "estimation_failed": red.failed,
        "diagnosis": red.diagnosis,
    }
    rows = [["resource_mean", report["resource"], "resource_mean", "sum_k <N_k>"]]
    code = EXIT_OK
    if red.failed:
        code = EXIT_ESTIMATION
        print(f"estimation failure: {red.diagnosis}", file=sys.stderr)
    else:
        value = fisher.weighted_crb(red, s.mu)
        report["crb"] = value
        rows.append(["pipeline_crb", value, "reduced_weighted_crb", "Tr(W F^-1)/mu on the reduced QFIM"])
        report["closed_forms"] = []
        for b in closed_forms(s, layout, qfim):
            rows.append([b.name, b.value, b.name, b.formula])
            report["closed_forms"].append({"name": b.name, "value": b.value, "formula": b.formula,
                                           "inputs": b.inputs})
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{s.stem}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_csv(out_dir / f"{s.stem}.csv", ["quantity", "value", "formula_id", "formula"], rows)
    return code


def parse_sweep(text: str) -> tuple[str, np.ndarray]:
    try:
        key, rng = text.split("=", 1)
        lo, hi, step = (float(x) for x in rng.split(":"))
    except ValueError:
        raise SchemaError(f"sweep must look like key=lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise SchemaError("sweep needs lo <= hi and step > 0")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return key.strip(), lo + step * np.arange(count)


TABLES = {
    "gns-g": ("d_prime", "1:10:1"),
    "imaging": ("d_prime", "1:8:1"),
    "ghz-local": ("d", "1:10:1"),
    "appendix-e": ("x", "-0.9:0.9:0.05"),
    "enhancement": ("t", "0:1:0.1"),
}


def table_rows(family: str, key: str, values: np.ndarray, params: dict):
    def integral(x):
        if abs(x - round(x)) > 1e-9 or x < 1:
            raise SchemaError(f"{key} must be a positive integer")
        return int(round(x))

    if family == "gns-g":
        header = ["d_prime", "g_gns", "g_uns", "formula_id"]
        rows = []
        for x in values:
            dp = integral(x)
            _, g = fisher.symmetric_qfim_inverse(1.0, -1.0 / dp, dp)
            rows.append([dp, g, 1.0, "symmetric_inverse_trace_factor"])
        return header, rows
    if family == "imaging":
        N = int(params.get("N", 24))
        mu = int(params.get("mu", 1))
        header = ["d_prime", "N", "gns", "uns", "noon_individual", "uns_over_gns", "formula_id"]
        rows = []
        for x in values:
            dp = integral(x)
            v = dp * N * N / (dp + 1) ** 2
            e_gns = bounds.imaging_symmetric(v, -1.0 / dp if dp > 1 else 0.0, dp, mu)
            e_uns = bounds.imaging_symmetric(v, 0.0, dp, mu)
            e_noon = bounds.noon_individual(dp, N, mu) if N % dp == 0 else float("nan")
            rows.append([dp, N, e_gns, e_uns, e_noon, e_uns / e_gns, "imaging_symmetric;noon_individual"])
        return header, rows
    if family == "ghz-local":
        n = int(params.get("n", 1))
        lmax, lmin = float(params.get("lam_max", 1.0)), float(params.get("lam_min", 0.0))
        header = ["d", "n", "ghz_sum", "local_sum", "local_over_ghz", "formula_id"]
        rows = []
        for x in values:
            d = integral(x)
            a = bounds.ghz_sum(d, n, lmax, lmin)
            b = bounds.local_sum(d, n * d, lmax, lmin)
            rows.append([d, n, a, b, b / a, "ghz_sum;local_sum"])
        return header, rows
    if family == "appendix-e":
        a, b = float(params.get("alpha", np.pi / 8)), float(params.get("beta", 0.0))
        xm = bounds.x_min(a, b)
        header = ["x", "E", "x_min", "E_min", "formula_id"]
        rows = []
        for x in values:
            if abs(x) >= 1:
                raise SchemaError("x must lie strictly inside (-1, 1)")
            rows.append([x, bounds.two_qubit_nonorthogonal(a, b, x), xm,
                         bounds.two_qubit_nonorthogonal(a, b, xm), "two_qubit_nonorthogonal"])
        return header, rows
    if family == "enhancement":
        header = ["t", "v1", "v2", "l1_norm", "ghz_over_local", "inverse_l1", "formula_id"]
        rows = []
        for t in values:
            v = np.array([1.0, t]) / np.hypot(1.0, t)
            l1 = np.abs(v).sum()
            local = np.sum(np.abs(v) ** (2 / 3)) ** 3
            rows.append([t, v[0], v[1], l1, l1**2 / local, 1 / l1, "weighted_ghz;local_optimal"])
        return header, rows
    raise SchemaError(f"unknown table family {family!r}")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsnet", description="Fisher information and Cramer-Rao bounds "
                                 "for networks of quantum sensors.")
    ap.add_argument("--out", default=".", help="directory for report files")
    sub = ap.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="evaluate a scenario file")
    r.add_argument("scenario")
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=sorted(suites.SUITES))
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--step", type=float, default=None)
    t = sub.add_parser("table", help="sweep a closed-form family")
    t.add_argument("family", choices=sorted(TABLES))
    t.add_argument("--sweep", default=None, help="key=lo:hi:step")
    t.add_argument("--param", action="append", default=[], help="key=value for fixed inputs")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code else EXIT_OK
    out = Path(args.out)
    if args.verb == "run":
        return run_scenario(args.scenario, out)
    if args.verb == "verify":
        res = suites.SUITES[args.suite](args.trials, args.seed, args.step)
        print(res.summary())
        for note in res.notes:
            print("  " + note)
        return EXIT_OK if res.ok else EXIT_FAIL
    try:
        key, values = parse_sweep(args.sweep or f"{TABLES[args.family][0]}={TABLES[args.family][1]}")
        if key != TABLES[args.family][0]:
            raise SchemaError(f"family {args.family} sweeps {TABLES[args.family][0]!r}, not {key!r}")
        params = dict(p.split("=", 1) for p in args.param)
        header, rows = table_rows(args.family, key, values, params)
    except (SchemaError, ValueError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    path = out / f"{args.family}.csv"
    write_csv(path, header, rows)
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
