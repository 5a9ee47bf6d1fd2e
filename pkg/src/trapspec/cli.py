"""Command-line interface: configuration, orchestration, file emission.

Configs are JSON with explicit unit suffixes in key names (nu_kHz, C_au,
r_max_bohr, ...); no implicit unit guessing. Outputs are byte-identical
across reruns of the same config: fixed float formatting, fixed row order,
and every emitted file embeds the config hash.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
64 unknown command.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import constants
from .bsplines import BasisSpec
from .errors import ConfigError, DomainError, NumericError
from .potentials import (PotentialCurve, TrapSystem, load_potential_table,
                         scale_mass)
from .pseudopotential import (PseudoModel, energy_roots, energy_series,
                              f_c_ho, f_c_pseudo, f_c_series)
from .scattering import scattering_length, self_consistent_aE
from .solver import TRAP_INDUCED, count_nodes, solve_radial
from .spectra import (DipoleFunction, SpectrumTable, build_spectrum,
                      enhancement_f, enhancement_g)

log = logging.getLogger("trapspec")

COMMANDS = ("solve", "spectrum", "scatlen", "pseudo", "compare", "sweep")
FLOAT_FMT = "{:.12e}"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64


# -- configuration ------------------------------------------------------------

def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def load_config(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _reduced_mass(cfg: dict, mass_factor: float | None = None) -> float:
    system = cfg.get("system", {})
    if "mu_me" in system:
        mu = float(system["mu_me"])
    elif "mass_amu" in system:
        mu = constants.mu_from_amu(float(system["mass_amu"]))
    else:
        raise ConfigError("system block needs mu_me or mass_amu")
    factor = system.get("mass_factor", 1.0) if mass_factor is None else mass_factor
    return scale_mass(mu, float(factor))


def _omega_list(cfg: dict) -> list[float]:
    trap = cfg.get("trap", {})
    if "nu_kHz" in trap:
        nus = trap["nu_kHz"]
        nus = nus if isinstance(nus, list) else [nus]
        return [constants.omega_from_khz(float(n)) for n in nus]
    if "omega_au" in trap:
        oms = trap["omega_au"]
        return [float(o) for o in (oms if isinstance(oms, list) else [oms])]
    raise ConfigError("trap block needs nu_kHz or omega_au")


def _build_curve(spec: dict) -> PotentialCurve:
    tail = tuple((int(t["n"]), float(t["C_au"])) for t in spec.get("tail", []))
    if "table_path" in spec:
        r, v = load_potential_table(spec["table_path"])
        return PotentialCurve.from_table(
            r, v, tail=tail, match_radius=spec.get("match_radius_bohr"))
    model = spec.get("model")
    if model == "free":
        return PotentialCurve.free()
    if model == "morse":
        return PotentialCurve.morse(
            depth=float(spec["depth_hartree"]),
            r_eq=float(spec["r_eq_bohr"]),
            stiffness=float(spec["stiffness_inv_bohr"]),
            tail=tail,
            match_radius=float(spec.get("match_radius_bohr", math.inf)))
    if model == "lj":
        return PotentialCurve.lennard_jones(
            tail=tail, a12=float(spec["a12_au"]),
            match_radius=spec.get("match_radius_bohr"))
    if model == "tail":
        return PotentialCurve.tail_only(tail)
    raise ConfigError(f"unknown potential spec: {spec}")


def _build_dipole(cfg: dict) -> DipoleFunction:
    dip = cfg.get("dipole", {"constant_au": 1.0})
    if "constant_au" in dip:
        return DipoleFunction.constant(float(dip["constant_au"]))
    if "table_path" in dip:
        r, d = load_potential_table(dip["table_path"])
        return DipoleFunction.from_table(r, d, asymptote=float(dip["asymptote_au"]))
    raise ConfigError("dipole block needs constant_au or table_path")


def _default_grading(r_max: float, r_min: float, molecular: bool) -> float:
    """Exponential grading putting ~60% of the breakpoints below 100 bohr
    for molecular curves in large boxes; uniform otherwise."""
    span = r_max - r_min
    if not molecular or r_max <= 500.0:
        return 0.0
    target = (100.0 - r_min) / span

    def frac(g):
        return math.expm1(0.6 * g) / math.expm1(g) - target

    return brentq(frac, 1e-6, 80.0)


def _build_basis(cfg: dict, curve: PotentialCurve, omegas: list[float],
                 mu: float) -> BasisSpec:
    sol = cfg.get("solver", {})
    r_min = float(sol.get("r_min_bohr", curve.inner_wall))
    if "r_max_bohr" in sol:
        r_max = float(sol["r_max_bohr"])
    else:
        finite = [o for o in omegas if o > 0]
        if not finite:
            raise ConfigError("solver.r_max_bohr is required for omega = 0 runs")
        r_max = 8.0 / math.sqrt(mu * min(finite))
    grading = sol.get("grading")
    if grading is None:
        grading = _default_grading(r_max, r_min, molecular=curve.label != "free")
    return BasisSpec(
        r_min=r_min, r_max=r_max,
        n_basis=int(sol.get("n_basis", 400)),
        degree=int(sol.get("degree", 7)),
        grading=float(grading),
        fixed_points=tuple(float(x) for x in sol.get("fixed_points_bohr", [])))


def _solve_count(cfg: dict, basis: BasisSpec) -> int:
    n = int(cfg.get("solver", {}).get("count", min(120, basis.n_basis)))
    return n


def _first_trap_state(states):
    for s in states:
        if s.label == TRAP_INDUCED:
            return s
    raise NumericError("no trap-induced state among the computed levels; "
                       "raise solver.count")


# -- deterministic emission ---------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, str):
        return x
    return FLOAT_FMT.format(float(x))


def _write_csv(path: Path, header_lines: list[str], columns: list[str],
               rows: list[tuple]) -> None:
    lines = [f"# {h}" for h in header_lines]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n",
                    encoding="utf-8")


def _spectrum_csv_rows(table: SpectrumTable) -> list[tuple]:
    rows = []
    for i in range(len(table.v)):
        rows.append((
            int(table.v[i]), table.energy[i], table.label[i], table.r_out[i],
            table.i_v[i], table.gamma_v[i],
            None if table.f_v is None else table.f_v[i],
            None if table.g_v is None else table.g_v[i]))
    return rows


SPECTRUM_COLUMNS = ["v", "E_v_hartree", "label", "R_out_bohr", "I_v",
                    "Gamma_v", "f_v", "g_v"]


# -- commands -----------------------------------------------------------------

def _cmd_solve(cfg: dict, out: Path, fmt: str, jobs: int) -> list[Path]:
    h = config_hash(cfg)
    channel = cfg.get("solver", {}).get("channel", "initial")
    if channel not in ("initial", "final"):
        raise ConfigError(f"solver.channel must be initial or final, got {channel}")
    curve = _build_curve(cfg["potentials"][channel])
    mu = _reduced_mass(cfg)
    j = int(cfg.get("system", {}).get(
        "J_initial" if channel == "initial" else "J_final", 0))
    omegas = _omega_list(cfg)
    basis = _build_basis(cfg, curve, omegas, mu)
    artifacts = []
    for i, omega in enumerate(omegas):
        sys_i = TrapSystem(mu=mu, j=j, omega=omega)
        states = solve_radial(curve, sys_i, basis, _solve_count(cfg, basis))
        rows = [(s.v, s.energy, s.label, count_nodes(s)) for s in states]
        path = out / f"solve_{i:02d}.csv"
        _write_csv(path, [f"trapspec solve omega_au={_fmt(omega)}",
                          f"config_sha256={h}"],
                   ["v", "E_v_hartree", "label", "nodes"], rows)
        artifacts.append(path)
        artifacts += _dump_wavefunctions(cfg, states, out, i, h)
    return artifacts


def _dump_wavefunctions(cfg: dict, states, out: Path, trap_index: int,
                        h: str) -> list[Path]:
    dump = cfg.get("outputs", {}).get("dump_states")
    if not dump:
        return []
    samples = cfg.get("outputs", {}).get("wavefunction_samples_bohr")
    artifacts = []
    for v in dump:
        if v < 0 or v >= len(states):
            raise ConfigError(f"dump state v={v} was not computed")
        state = states[v]
        radii = (np.asarray(samples, dtype=float) if samples
                 else np.linspace(state.grid[0], state.grid[-1], 2001))
        u = state.evaluate(radii)
        path = out / f"wavefunction_{trap_index:02d}_v{v:03d}.csv"
        _write_csv(path, [f"trapspec wavefunction v={v}", f"config_sha256={h}"],
                   ["R_bohr", "u"], list(zip(radii, u)))
        artifacts.append(path)
    return artifacts


def _spectrum_tables(cfg: dict, mass_factor: float | None = None
                     ) -> tuple[list[SpectrumTable], dict]:
    """Solve initial+final channels at every trap frequency of the config."""
    mu = _reduced_mass(cfg, mass_factor)
    system = cfg.get("system", {})
    j_i = int(system.get("J_initial", 0))
    j_f = int(system.get("J_final", j_i))
    curve_i = _build_curve(cfg["potentials"]["initial"])
    curve_f = _build_curve(cfg["potentials"]["final"])
    dipole = _build_dipole(cfg)
    intensity = float(cfg.get("laser_intensity_au", 1.0))
    omegas = _omega_list(cfg)
    basis = _build_basis(cfg, curve_i, omegas, mu)
    count = _solve_count(cfg, basis)

    tables = []
    for omega in omegas:
        sys_i = TrapSystem(mu=mu, j=j_i, omega=omega)
        sys_f = TrapSystem(mu=mu, j=j_f, omega=omega)
        initial = _first_trap_state(solve_radial(curve_i, sys_i, basis, count))
        finals = solve_radial(curve_f, sys_f, basis, count)
        meta = {"nu_kHz": constants.khz_from_omega(omega),
                "mass_factor": (cfg.get("system", {}).get("mass_factor", 1.0)
                                if mass_factor is None else mass_factor)}
        tables.append(build_spectrum(initial, finals, dipole, curve_f, sys_f,
                                     laser_intensity=intensity, metadata=meta))
    shared = {"mu": mu, "basis": basis, "count": count}
    return tables, shared


def _cmd_spectrum(cfg: dict, out: Path, fmt: str, jobs: int) -> list[Path]:
    h = config_hash(cfg)
    tables, _ = _spectrum_tables(cfg)
    ref_cfg = cfg.get("reference")
    if ref_cfg:
        ref_over = dict(cfg)
        ref_over["trap"] = {"nu_kHz": [ref_cfg["nu_kHz"]]}
        ref_tables, _ = _spectrum_tables(ref_over,
                                         mass_factor=ref_cfg.get("mass_factor"))
        ref = ref_tables[0]
        same_mass = ref.metadata.get("mass_factor") == tables[0].metadata.get("mass_factor")
        tables = [t.with_f(enhancement_f(t, ref)) if same_mass
                  else t.with_g(enhancement_g(t, ref)) for t in tables]
    artifacts = []
    for i, table in enumerate(tables):
        if fmt == "json":
            path = out / f"spectrum_{i:02d}.json"
            payload = table.to_json_dict()
            payload["config_sha256"] = h
            _write_json(path, payload)
        else:
            path = out / f"spectrum_{i:02d}.csv"
            _write_csv(path,
                       [f"trapspec spectrum omega_au={_fmt(table.omega)}",
                        f"config_sha256={h}"],
                       SPECTRUM_COLUMNS, _spectrum_csv_rows(table))
        artifacts.append(path)
    return artifacts


def _cmd_scatlen(cfg: dict, out: Path, fmt: str, jobs: int) -> list[Path]:
    h = config_hash(cfg)
    curve = _build_curve(cfg["potentials"]["initial"])
    mu = _reduced_mass(cfg)
    sc = cfg.get("scattering", {})
    schedule = tuple(float(x) for x in sc.get("r_max_schedule_bohr", ()))
    result = scattering_length(
        curve, mu, schedule=schedule,
        tol=float(sc.get("tol", 0.005)),
        n_basis=int(sc.get("n_basis", 600)),
        grading=float(sc.get("grading", 6.0)),
        fixed_points=tuple(float(x) for x in sc.get("fixed_points_bohr", [])))
    path = out / "scatlen.csv"
    _write_csv(path,
               [f"trapspec scatlen a_sc_bohr={_fmt(result.a_sc)}",
                f"config_sha256={h}"],
               ["R_max_bohr", "E0_hartree", "a_estimate_bohr"],
               list(result.history))
    return [path]


def _cmd_pseudo(cfg: dict, out: Path, fmt: str, jobs: int,
                xi: float | None = None, count: int | None = None) -> list[Path]:
    h = config_hash(cfg)
    ps = cfg.get("pseudo", {})
    count = int(ps.get("count", 6)) if count is None else count
    if xi is None and "xi" in ps:
        xi = float(ps["xi"])
    if xi is not None:
        sys1 = TrapSystem(mu=1.0, j=0, omega=1.0)  # scaled units: a_ho = 1
        model = PseudoModel(a=xi, sys=sys1)
    else:
        mu = _reduced_mass(cfg)
        omega = _omega_list(cfg)[0]
        sys1 = TrapSystem(mu=mu, j=0, omega=omega)
        model = PseudoModel(a=float(ps["a_bohr"]), sys=sys1)

    roots = energy_roots(model, count)
    rows = []
    for n_t, x in enumerate(roots):
        try:
            a_inv = self_consistent_aE(x * sys1.omega, sys1)
        except NumericError:
            a_inv = None
        rows.append((n_t, x, x * sys1.omega, a_inv))
    path = out / "pseudo_roots.csv"
    _write_csv(path,
               [f"trapspec pseudo xi={_fmt(model.xi)}", f"config_sha256={h}"],
               ["n_t", "x", "E_hartree", "a_inverted_bohr"], rows)
    artifacts = [path]

    ref = cfg.get("reference")
    if ref and xi is None:
        omega_ref = constants.omega_from_khz(float(ref["nu_kHz"]))
        xi_val = model.xi
        xi_ref = model.a / sys1.with_omega(omega_ref).a_ho
        orders = [int(o) for o in ps.get("orders", [4, 6])]
        frows = [("pseudo", f_c_pseudo(model, omega_ref)),
                 ("ho", f_c_ho(sys1.omega, omega_ref))]
        for o in orders:
            frows.append((f"series_{o}",
                          f_c_series(xi_val, xi_ref, sys1.omega, omega_ref, o)))
        fpath = out / "pseudo_fc.csv"
        _write_csv(fpath, [f"trapspec pseudo f_c omega_ref_au={_fmt(omega_ref)}",
                           f"config_sha256={h}"],
                   ["estimate", "f_c"], frows)
        artifacts.append(fpath)
    return artifacts


def _cmd_compare(spec_path: Path, ref_path: Path, out: Path) -> list[Path]:
    spec = SpectrumTable.from_json_dict(json.loads(spec_path.read_text()))
    ref = SpectrumTable.from_json_dict(json.loads(ref_path.read_text()))
    same_mass = spec.mu == ref.mu
    ratio = enhancement_f(spec, ref) if same_mass else enhancement_g(spec, ref)
    name = "f_v" if same_mass else "g_v"
    n = len(ratio)
    rows = [(int(spec.v[i]), spec.i_v[i], ref.i_v[i], ratio[i]) for i in range(n)]
    path = out / "compare.csv"
    _write_csv(path,
               [f"trapspec compare {name}",
                f"spec_sha256={hashlib.sha256(spec_path.read_bytes()).hexdigest()}",
                f"ref_sha256={hashlib.sha256(ref_path.read_bytes()).hexdigest()}"],
               ["v", "I_v", "I_v_ref", name], rows)
    return [path]


# -- sweep --------------------------------------------------------------------

def _sweep_point(cfg_json: str, i: int, j: int) -> dict:
    """One (omega, mass factor) grid point; used by worker processes."""
    cfg = json.loads(cfg_json)
    sweep = cfg["sweep"]
    nu = float(sweep["nu_kHz"][i])
    factor = float(sweep["mass_factors"][j])
    ref = sweep.get("reference", cfg.get("reference"))
    if ref is None:
        raise ConfigError("sweep needs a reference block (nu_kHz, mass_factor)")

    point_cfg = dict(cfg)
    point_cfg["trap"] = {"nu_kHz": [nu]}
    tables, _ = _spectrum_tables(point_cfg, mass_factor=factor)
    table = tables[0]

    ref_cfg = dict(cfg)
    ref_cfg["trap"] = {"nu_kHz": [ref["nu_kHz"]]}
    ref_tables, _ = _spectrum_tables(ref_cfg, mass_factor=ref.get("mass_factor"))
    g_v = enhancement_g(table, ref_tables[0])
    g_c = float(g_v[0]) if np.isfinite(g_v[0]) else float(np.nanmedian(g_v[:max(table.n_bound - 2, 1)]))
    return {"i": i, "j": j, "nu_kHz": nu, "mass_factor": factor, "g_c": g_c}


def _cmd_sweep(cfg: dict, out: Path, fmt: str, jobs: int) -> list[Path]:
    h = config_hash(cfg)
    sweep = cfg.get("sweep")
    if not sweep or "nu_kHz" not in sweep or "mass_factors" not in sweep:
        raise ConfigError("sweep block needs nu_kHz and mass_factors lists")
    points = [(i, j) for i in range(len(sweep["nu_kHz"]))
              for j in range(len(sweep["mass_factors"]))]

    journal = out / "sweep_journal.jsonl"
    done: dict[tuple[int, int], dict] = {}
    if journal.exists():
        for line in journal.read_text().splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            if entry.get("hash") == h:
                done[(entry["row"]["i"], entry["row"]["j"])] = entry["row"]
    todo = [p for p in points if p not in done]
    log.info("sweep: %d points, %d cached", len(points), len(done))

    cfg_json = json.dumps(cfg, sort_keys=True)
    results: list[dict] = []
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_sweep_point, cfg_json, i, j): (i, j)
                       for i, j in todo}
            for fut in futures:
                results.append(fut.result())
    else:
        for i, j in todo:
            results.append(_sweep_point(cfg_json, i, j))

    with open(journal, "a", encoding="utf-8") as fh:
        for row in sorted(results, key=lambda r: (r["i"], r["j"])):
            fh.write(json.dumps({"hash": h, "row": row}, sort_keys=True) + "\n")
    for row in results:
        done[(row["i"], row["j"])] = row

    rows = [(p[0], p[1], done[p]["nu_kHz"], done[p]["mass_factor"], done[p]["g_c"])
            for p in points]
    path = out / "sweep.csv"
    _write_csv(path, ["trapspec sweep g_c", f"config_sha256={h}"],
               ["i", "j", "nu_kHz", "mass_factor", "g_c"], rows)
    return [path]


# -- entry point --------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trapspec",
        description="Photoassociation of two trapped ultracold atoms: "
                    "radial solves, spectra, scattering lengths, contact "
                    "models and parameter sweeps.")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name != "compare":
            p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "pseudo":
            p.add_argument("--xi", type=float, default=None)
            p.add_argument("--count", type=int, default=None)
        if name == "compare":
            p.add_argument("--spec", required=True)
            p.add_argument("--ref", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    level = os.environ.get("TRAPSPEC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")

    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        print(f"trapspec: unknown command {argv[0]!r}\n", file=sys.stderr)
        _build_parser().print_usage(sys.stderr)
        return EXIT_USAGE
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "compare":
            artifacts = _cmd_compare(Path(args.spec), Path(args.ref), out)
        else:
            cfg = load_config(args.config)
            if args.command == "solve":
                artifacts = _cmd_solve(cfg, out, args.format, args.jobs)
            elif args.command == "spectrum":
                artifacts = _cmd_spectrum(cfg, out, args.format, args.jobs)
            elif args.command == "scatlen":
                artifacts = _cmd_scatlen(cfg, out, args.format, args.jobs)
            elif args.command == "pseudo":
                artifacts = _cmd_pseudo(cfg, out, args.format, args.jobs,
                                        xi=args.xi, count=args.count)
            else:
                artifacts = _cmd_sweep(cfg, out, args.format, args.jobs)
    except (ConfigError, DomainError) as exc:
        print(f"trapspec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"trapspec: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for a in artifacts:
        log.info("wrote %s", a)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
