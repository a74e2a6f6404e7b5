"""Command-line entry point.

Exit codes: 0 when every checked metric passes, 1 when any fails, 2 on a
usage or configuration error. Numeric output goes to files in the output
directory (``--out``, else ``$MOLQSIM_OUTPUT_DIR``, else the config's
``output_dir``, else ``./molqsim_out``); standard output gets a summary.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import dynamics as dyn
from . import geometry as geo
from . import quantify as qf
from . import scenarios as sc
from . import spectral
from . import states as st
from ._accel import backend
from .hamiltonian import HamiltonianError, LaserDrive, basis_labels, build_hamiltonian

OUTPUT_ENV = "MOLQSIM_OUTPUT_DIR"
DEFAULT_OUTPUT = "molqsim_out"

log = logging.getLogger("molqsim")


def _out_dir(args, cfg=None) -> Path:
    path = args.out or os.environ.get(OUTPUT_ENV) or (cfg.output_dir if cfg else None) or DEFAULT_OUTPUT
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load_config(args.config) if getattr(args, "config", None) else cfgmod.RunConfig()
    return cfgmod.apply_sets(cfg, getattr(args, "set", None))


def _echo_config(cfg, out: Path, name: str):
    path = out / f"{name}_config.toml"
    path.write_text(cfgmod.emit_config(cfg), encoding="utf-8")
    print(f"effective config: {path}")


def _print_result(res: sc.ScenarioResult, verbose: bool = True):
    print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}  ({res.runtime_s:.2f} s)")
    if verbose:
        for m in res.metrics:
            flag = "ok  " if m.passed else "FAIL"
            print(f"   {flag} {m.name:<44s} {m.value:>12.6g}  {m.kind} {m.expected:.6g}"
                  f" tol {m.tolerance:g}  [{m.source}]")


def cmd_scenario(args) -> int:
    cfg = _load(args)
    name = args.name or cfg.scenario
    if name is None:
        raise cfgmod.ConfigError("no scenario given")
    if name not in sc.SCENARIOS:
        raise cfgmod.ConfigError(f"unknown scenario {name!r}; choose from {sorted(sc.SCENARIOS)}")
    cfg = cfgmod.from_dict({**cfgmod.to_dict(cfg), "scenario": name})
    out = _out_dir(args, cfg)
    _echo_config(cfg, out, name)
    res = sc.SCENARIOS[name](**cfg.overrides)
    sc.write_outputs(res, out, cfg.record_every)
    _print_result(res)
    return 0 if res.passed else 1


def cmd_suite(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    _echo_config(cfg, out, "suite")
    per_scenario = {}
    for name in sc.SCENARIOS:
        accepted = cfgmod._scenario_kwargs(name)
        per_scenario[name] = {k: v for k, v in cfg.overrides.items() if k in accepted}
    results = sc.run_suite(per_scenario)
    print(f"{'scenario':<36s} {'result':<6s} {'metrics':>8s} {'failed':>7s} {'time/s':>8s}")
    for res in results:
        sc.write_outputs(res, out, cfg.record_every)
        failed = [m.name for m in res.metrics if not m.passed]
        print(f"{res.name:<36s} {'PASS' if res.passed else 'FAIL':<6s} {len(res.metrics):>8d} "
              f"{len(failed):>7d} {res.runtime_s:>8.2f}")
        for f in failed:
            m = res.metric(f)
            print(f"   FAIL {f}: {m.value:.6g} ({m.kind} {m.expected:.6g}, tol {m.tolerance:g})")
    ok = all(r.passed for r in results)
    print(f"backend: {backend()}; {'all passed' if ok else 'some expectations failed'}")
    return 0 if ok else 1


def cmd_geometry(args) -> int:
    arr = geo.PRESETS[args.preset](refractive_index=args.refractive_index)
    params = geo.collective_params(arr)
    out = _out_dir(args)
    print(f"{args.preset} at n = {args.refractive_index:g}")
    for i in range(arr.n_sites):
        for j in range(i + 1, arr.n_sites):
            print(f"  V_{i + 1}{j + 1} = {params.V[i, j]:10.2f} GHz   Gamma_{i + 1}{j + 1} = "
                  f"{params.Gamma[i, j] * 1000:8.2f} MHz")
    print(f"  Gamma_ii = {params.Gamma[0, 0] * 1000:.1f} MHz")
    table = geo.coupling_curve(arr, args.r_min, args.r_max, args.steps)
    path = out / f"coupling_curve_{args.preset}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        keys = list(table)
        fh.write(f"# {args.preset}: r_nm is the nearest-neighbour separation; V in GHz, Gamma in GHz\n")
        w = csv.writer(fh)
        w.writerow(keys)
        for row in zip(*(table[k] for k in keys)):
            w.writerow([repr(float(x)) for x in row])
    print(f"wrote {path}")
    return 0


def cmd_spectrum(args) -> int:
    rows = spectral.spectrum_table(args.preset)
    out = _out_dir(args)
    labels = basis_labels(3)
    path = out / f"spectrum_{args.preset}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# trimer eigensystem {args.preset}: lab-frame energies in THz, coefficients in the "
                 "computational basis (closed form)\n")
        w = csv.writer(fh)
        w.writerow(["label", "energy_thz", "energy_numeric_thz"] + [f"c_{b}" for b in labels] + ["class"])
        for r in rows:
            w.writerow([r["label"], f"{r['energy_thz']:.6f}", f"{r['energy_numeric_thz']:.6f}"]
                       + [f"{r['coefficients'].get(b, 0.0):.6f}" for b in labels] + [r["class"]])
    for r in rows:
        coeffs = " ".join(f"{b}:{c:+.4f}" for b, c in r["coefficients"].items())
        print(f"{r['label']}  {r['energy_thz']:10.4f} THz  {coeffs:<48s} {r['class']}")
    print(f"wrote {path}")
    return 0


def _load_state(args) -> tuple[str, np.ndarray]:
    if args.file:
        rho = np.load(args.file)
        return Path(args.file).stem, dyn.validate_density_matrix(rho)
    if args.state not in st.NAMED_STATES:
        raise cfgmod.ConfigError(f"unknown state {args.state!r}; choose from {sorted(st.NAMED_STATES)}")
    return args.state, st.NAMED_STATES[args.state]()


def cmd_mermin(args) -> int:
    name, rho = _load_state(args)
    if rho.shape != (8, 8):
        raise cfgmod.ConfigError("Mermin evaluation needs a three-qubit state")
    value, setting = qf.mermin_maximize(rho, grid_points=args.grid, top_k=args.top_k)
    out = _out_dir(args)
    summary = {"state": name, "value": value, "theta": list(setting.theta), "phi": list(setting.phi),
               "violates_classical_bound": bool(value > 2.0 + 1e-9), "grid_points": args.grid,
               "top_k": args.top_k}
    path = out / f"mermin_{name}_summary.json"
    path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"{name}: max Upsilon = {value:.6f}  ({'violates' if summary['violates_classical_bound'] else 'within'}"
          " the classical bound 2)")
    print("  theta = " + ", ".join(f"{a:+.5f}" for a in setting.theta))
    print("  phi   = " + ", ".join(f"{a:+.5f}" for a in setting.phi))
    return 0


def cmd_evolve(args) -> int:
    cfg = _load(args)
    geom = cfg.geometry or cfgmod.GeometryConfig(preset=args.geometry)
    ev = cfgmod.to_dict(cfgmod.RunConfig(evolve=cfg.evolve or cfgmod.EvolveConfig()))["evolve"]
    for key in ("initial", "t_final_ps", "dt_ps"):
        if getattr(args, key) is not None:
            ev[key] = getattr(args, key)
    ev = cfgmod.from_dict({"evolve": ev}).evolve
    arr = geom.build()
    params = geo.collective_params(arr)
    n = arr.n_sites
    if len(ev.initial) != n:
        raise cfgmod.ConfigError(f"initial state {ev.initial!r} does not match {n} sites")
    nu = [s.nu_thz for s in arr.sites]
    frame = float(np.mean(nu))
    drive = LaserDrive(ev.omega_ghz, ev.nu_l_thz or frame) if ev.omega_ghz > 0 else None
    H = build_hamiltonian(nu, params.V, drive=drive, frame_thz=frame)
    dt = ev.dt_ps or dyn.step_size_suggest(H)
    tr = dyn.evolve(H, params.Gamma, st.basis_dm(ev.initial), ev.t_final_ps, dt, method=ev.method)
    series = {f"rho_{b}_{b}": tr.population(b) for b in basis_labels(n)}
    series["purity"] = np.einsum("tij,tji->t", tr.states, tr.states).real
    res = sc.ScenarioResult("evolve", {"initial": ev.initial, "dt_ps": tr.dt_ps, "t_final_ps": ev.t_final_ps,
                                       "V_ghz": params.V.tolist(), "Gamma_ghz": params.Gamma.tolist()},
                            tr.times_ps, None, series)
    out = _out_dir(args, cfg)
    _echo_config(cfgmod.RunConfig(output_dir=cfg.output_dir, record_every=cfg.record_every,
                                  geometry=geom, evolve=ev), out, "evolve")
    sc.write_outputs(res, out, cfg.record_every)
    final = ", ".join(f"{b}: {tr.population(b)[-1]:.4f}" for b in basis_labels(n))
    print(f"evolved {ev.initial} for {ev.t_final_ps:g} ps ({len(tr)} records, drift {tr.max_trace_drift:.1e})")
    print(f"  final populations  {final}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="molqsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
        if config:
            sp.add_argument("--config", help="TOML run configuration")
            sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override, e.g. dt_ps=0.005")

    s = sub.add_parser("scenario", help="run one scenario")
    s.add_argument("name", nargs="?", help=", ".join(sc.SCENARIOS))
    common(s)
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("suite", help="run every scenario and print a pass/fail table")
    common(s)
    s.set_defaults(func=cmd_suite)

    s = sub.add_parser("geometry", help="collective parameters of a preset geometry")
    gsub = s.add_subparsers(dest="what", required=True)
    g = gsub.add_parser("couplings", help="V_ij and Gamma_ij versus separation")
    g.add_argument("--preset", default="trimer_fig1", choices=sorted(geo.PRESETS))
    g.add_argument("--r-min", type=float, default=2.0)
    g.add_argument("--r-max", type=float, default=5.0)
    g.add_argument("--steps", type=int, default=31)
    g.add_argument("--refractive-index", type=float, default=geo.DEFAULT_REFRACTIVE_INDEX)
    common(g, config=False)
    g.set_defaults(func=cmd_geometry)

    s = sub.add_parser("spectrum", help="trimer eigensystem table")
    s.add_argument("--preset", default="d2", choices=sorted(spectral.SPECTRUM_PRESETS))
    common(s, config=False)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("mermin", help="maximise the Mermin value of a three-qubit state")
    s.add_argument("--state", default="w_like", help=", ".join(st.NAMED_STATES))
    s.add_argument("--file", help=".npy file holding an 8x8 density matrix")
    s.add_argument("--grid", type=int, default=13)
    s.add_argument("--top-k", type=int, default=8)
    common(s, config=False)
    s.set_defaults(func=cmd_mermin)

    s = sub.add_parser("evolve", help="free or driven evolution of a geometry-defined array")
    s.add_argument("--geometry", default="dimer_fig1", choices=sorted(geo.PRESETS))
    s.add_argument("--initial", help="initial basis state, e.g. 01")
    s.add_argument("--t-final-ps", type=float)
    s.add_argument("--dt-ps", type=float)
    common(s)
    s.set_defaults(func=cmd_evolve)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (cfgmod.ConfigError, geo.GeometryError, HamiltonianError, dyn.StateError, qf.QuantifyError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():  # pragma: no cover
    sys.exit(run_cli())


if __name__ == "__main__":  # pragma: no cover
    main()
