"""Command-line interface.

Exit codes: 0 success, 1 a check or numeric failure, 2 bad usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from . import coefficients as cf
from .exact import format_rational
from .hierarchy import Hierarchy, flow_rhs, hamiltonian, sigma_gp, sigma_kdv, sigma_nls

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- shared helpers ---------------------------------------------------------------------------

def _index(value: str) -> int:
    n = int(value)
    cap = os.environ.get("HIERARCHIA_NMAX")
    if cap is not None and n > int(cap):
        raise UsageError(f"index {n} exceeds HIERARCHIA_NMAX={cap}")
    return n


def _manifest(args, **extra) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    out = {"tool": "hierarchia", "version": __version__, "config": config,
           "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
    out.update(extra)
    return out


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _render_poly(args, P, label: str) -> str:
    if args.format == "latex":
        return P.to_latex()
    if args.format == "json":
        return json.dumps(_manifest(args, label=label, poly=P.to_json()), indent=2)
    return P.to_text()


# -- symbolic commands ----------------------------------------------------------------------------

def cmd_sigma(args) -> int:
    h = Hierarchy.parse(args.hierarchy)
    if args.n < 0:
        raise UsageError("n must be nonnegative")
    fn = {Hierarchy.NLS: sigma_nls, Hierarchy.GP: sigma_gp, Hierarchy.KDV: sigma_kdv}[h]
    _emit(args, _render_poly(args, fn(args.n).poly, f"sigma_{h.value}_{args.n}"))
    return EXIT_OK


def cmd_hamiltonian(args) -> int:
    if args.n < 0:
        raise UsageError("n must be nonnegative")
    H = hamiltonian(args.hierarchy, args.n)
    _emit(args, _render_poly(args, H.density, f"H_{H.hierarchy.value}_{args.n}"))
    return EXIT_OK


def cmd_flow(args) -> int:
    if args.n < 0:
        raise UsageError("n must be nonnegative")
    _emit(args, _render_poly(args, flow_rhs(args.hierarchy, args.n), f"flow_{args.hierarchy}_{args.n}"))
    return EXIT_OK


def cmd_coeff_table(args) -> int:
    if args.nmax < 0 or args.jmax < 0:
        raise UsageError("ranges must be nonnegative")
    try:
        rows = cf.table(args.family, range(args.nmax + 1), range(args.jmax + 1), raw=args.raw)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        _emit(args, json.dumps(_manifest(args, table=[[format_rational(v) for v in r] for r in rows]),
                               indent=2))
    elif args.format == "latex":
        lines = [" & ".join([str(n)] + [format_rational(v) for v in r]) + r" \\" for n, r in enumerate(rows)]
        _emit(args, "\n".join(lines))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n"] + [f"j={j}" for j in range(args.jmax + 1)])
        for n, r in enumerate(rows):
            w.writerow([n] + [format_rational(v) for v in r])
        _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify as V

    if args.list:
        try:
            names = [c.name for c in V.checks(args.suite)]
        except KeyError as exc:
            raise UsageError(str(exc).strip("'\"")) from None
        _emit(args, json.dumps(names, indent=2))
        return EXIT_OK
    name = args.id
    if args.family is not None:
        if args.against != "oracle":
            raise UsageError("--family needs --against oracle")
        fam = args.family.upper()
        if fam not in ("D", "E"):
            raise UsageError("oracles exist for D and E")
        name = f"{fam}-vs-oracle"
    try:
        selected = V.checks(args.suite, name)
        perturbation = V.parse_perturbation(args.perturb) if args.perturb else None
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None
    nmax = V.nmax_cap(args.nmax)
    with V.injected(perturbation, warm=nmax + 2):
        if args.threads > 1:
            with ThreadPoolExecutor(args.threads) as pool:
                results = list(pool.map(lambda c: V.run_check(c, nmax), selected))
        else:
            results = [V.run_check(c, nmax) for c in selected]
    failed = V.first_failure(results)
    report = _manifest(
        args,
        checks=[r.to_json() for r in results],
        passed=sum(r.passed for r in results),
        total=len(results),
        first_failure=None if failed is None else failed.to_json(),
    )
    _emit(args, json.dumps(report, indent=2))
    if failed is not None:
        idx = ",".join(str(i) for i in failed.failure)
        sys.stderr.write(f"FAIL {failed.name} at index ({idx})\n")
        return EXIT_FAIL
    return EXIT_OK


# -- numeric commands -------------------------------------------------------------------------------

def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise UsageError(f"config file {path!r} not found")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path!r} does not parse: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return data


def _complex(text) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def _lambda_ray(text: str) -> List[complex]:
    try:
        a, b, k = text.split(":")
        ts = np.linspace(float(a), float(b), int(k))
    except ValueError:
        raise UsageError("--lambda-ray expects START:STOP:COUNT") from None
    if int(k) < 1 or float(a) <= 0:
        raise UsageError("--lambda-ray needs a positive start and count")
    return [1j * t for t in ts]


def cmd_scatter(args) -> int:
    from . import scattering as S

    cfg = _load_config(args.config)
    family = cfg.get("potential", args.potential)
    rtol = float(cfg.get("rtol", args.rtol))
    if rtol <= 0:
        raise UsageError("tolerances must be positive")
    box = cfg.get("box", args.box)
    if family == "dark":
        qm, qp = _complex(cfg.get("qminus", args.qminus)), _complex(cfg.get("qplus", args.qplus))
        try:
            pot = S.dark_soliton(qm, qp, box=box or 40.0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif family == "sech":
        pot = S.sech_potential(float(cfg.get("amplitude", args.amplitude)),
                               float(cfg.get("velocity", args.velocity)), box=box or 32.0)
    elif family == "constant":
        pot = S.constant_potential(_complex(cfg.get("qplus", args.qplus)), box=box or 10.0)
    else:
        raise UsageError(f"unknown potential family {family!r}")

    ray = cfg.get("lambda_ray", args.lambda_ray)
    lams = _lambda_ray(ray) if ray else [_complex(v) for v in (cfg.get("lambda") or args.lam or [])]
    if not lams:
        raise UsageError("give --lambda-ray or --lambda")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["lambda_re", "lambda_im", "a_re", "a_im", "log_a_re", "log_a_im", "residual"]
    closed = family in ("dark", "constant")
    if closed:
        header.append("abs_err_closed_form")
    w.writerow(header)
    try:
        for lam in lams:
            p = S.SpectralPoint.from_lambda(lam, zbc=pot.zbc)
            a, _ = S.transmission(pot, p, rtol=rtol, atol=rtol * 1e-2)
            st = S.integrate_jost(pot, p, "-1", rtol=rtol, atol=rtol * 1e-2)
            la = complex(np.log(a))
            row = [repr(lam.real), repr(lam.imag), repr(a.real), repr(a.imag),
                   repr(la.real), repr(la.imag), repr(st.residual)]
            if closed:
                row.append(repr(abs(a - S.transmission_dark(pot.q_minus, pot.q_plus, p))))
            w.writerow(row)
    except (S.NonConvergence, S.BoundaryNotSettled, S.ZeroDenominator, S.PoleAtZeta) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_FAIL
    if args.manifest:
        with open(args.manifest, "w") as fh:
            json.dump(_manifest(args, potential=pot.name), fh, indent=2)
    _emit(args, buf.getvalue())
    return EXIT_OK


_FLOWS = {"nls2": ("nls", 2), "nls3": ("nls", 3), "nls4": ("nls", 4), "gp2": ("gp", 2),
          "kdv3": ("kdv", 3), "kdv5": ("kdv", 5)}


def cmd_evolve(args) -> int:
    from . import evolve as Ev
    from .scattering import dark_soliton

    cfg = _load_config(args.config)
    flow = cfg.get("flow", args.flow)
    if flow not in _FLOWS:
        raise UsageError(f"unknown flow {flow!r}; choose from {sorted(_FLOWS)}")
    h, n = _FLOWS[flow]
    N = int(cfg.get("n", args.n))
    L = float(cfg.get("half_width", args.half_width))
    T = float(cfg.get("t", args.t))
    dt = float(cfg.get("dt", args.dt))
    init = cfg.get("init", args.init)
    if dt <= 0 or T <= 0 or L <= 0:
        raise UsageError("dt, t and half-width must be positive")
    background = None
    if h == "gp":
        background = dark_soliton(-1, 1, box=L)
        inits = {"tanh": lambda x: 0 * x, "tanh-bump": lambda x: 0.1 * np.exp(-(x - 2) ** 2)}
    elif h == "nls":
        inits = {"sech": lambda x: 1 / np.cosh(x) * np.exp(0.5j * x),
                 "plane": lambda x: np.ones_like(x)}
    else:
        inits = {"gauss": lambda x: np.exp(-x ** 2),
                 "sech2": lambda x: 2 / np.cosh(x) ** 2}
    if init not in inits:
        raise UsageError(f"initial data {init!r} not available for {flow}; choose from {sorted(inits)}")
    try:
        state = Ev.FieldState.on_grid(h, n, N, L, inits[init], background=background)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    steps = int(round(T / dt))
    every = max(1, steps // max(args.records, 1))
    try:
        traj = Ev.evolve_flow(state, dt, steps, record_every=every)
    except Ev.Blowup as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_FAIL
    top = 4 if h == "nls" else 2 if h == "gp" else 5
    indices = list(range(top + 1)) if h != "kdv" else [1, 3, 5]
    values = [Ev.invariant_values(s, indices) for s in traj.states]
    report = Ev.conservation_report(traj, indices)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"H{i}" for i in indices])
    for s, v in zip(traj.states, values):
        w.writerow([repr(s.t)] + [repr(x.real) for x in v])
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(buf.getvalue())
    if args.snapshot:
        Ev.write_snapshot(args.snapshot, traj.states[-1])
    out = _manifest(args, method=Ev.METHOD, dealias="2/3", grid={"N": N, "half_width": L},
                    dt=dt, steps=steps, drift=dict(zip(map(str, indices), report.drift)))
    _emit(args, json.dumps(out, indent=2))
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["text", "json", "latex", "csv"], default="text")
    common.add_argument("--out", help="write the main output here instead of stdout")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seedless", action="store_true",
                        help="accepted for scripts; nothing in the tool draws random numbers")

    p = _Parser(prog="hierarchia", description="Conserved densities, flows and checks for NLS/GP/KdV.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, doc in [("sigma", cmd_sigma, "conserved density sigma_n"),
                          ("hamiltonian", cmd_hamiltonian, "Hamiltonian density H_n"),
                          ("flow", cmd_flow, "right side of flow n")]:
        s = sub.add_parser(name, parents=[common], help=doc)
        s.add_argument("--hierarchy", choices=["nls", "gp", "kdv"], default="nls")
        s.add_argument("--n", type=_index, required=True)
        s.set_defaults(func=fn)

    from .verify import SUITES

    v = sub.add_parser("verify", parents=[common], help="run exact identity checks")
    v.add_argument("suite", choices=("all",) + SUITES)
    v.add_argument("--nmax", type=int, default=12)
    v.add_argument("--id", help="run only the named check")
    v.add_argument("--family", help="coefficient family for --against oracle")
    v.add_argument("--against", choices=["oracle"])
    v.add_argument("--perturb", help="inject one perturbation, e.g. coeff:D:6:1")
    v.add_argument("--list", action="store_true", help="list the checks in the suite and exit")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("coeff-table", parents=[common], help="table of a coefficient family")
    c.add_argument("--family", required=True)
    c.add_argument("--nmax", type=int, default=12)
    c.add_argument("--jmax", type=int, default=6)
    c.add_argument("--raw", action="store_true", help="ignore the index-range restriction")
    c.set_defaults(func=cmd_coeff_table)

    s = sub.add_parser("scatter", parents=[common], help="transmission coefficient as CSV")
    s.add_argument("--config")
    s.add_argument("--potential", choices=["dark", "sech", "constant"], default="dark")
    s.add_argument("--qminus", default="-1")
    s.add_argument("--qplus", default="1")
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--velocity", type=float, default=0.0)
    s.add_argument("--box", type=float)
    s.add_argument("--lambda-ray", dest="lambda_ray", help="START:STOP:COUNT along lambda = i t")
    s.add_argument("--lambda", dest="lam", action="append", help="complex lambda, repeatable")
    s.add_argument("--rtol", type=float, default=1e-11)
    s.add_argument("--manifest", help="write the run manifest (JSON) here")
    s.set_defaults(func=cmd_scatter)

    e = sub.add_parser("evolve", parents=[common], help="evolve a flow and report invariant drift")
    e.add_argument("--config")
    e.add_argument("--flow", choices=sorted(_FLOWS), default="nls2")
    e.add_argument("--init", default="sech")
    e.add_argument("--n", type=int, default=512, help="grid points (power of two)")
    e.add_argument("--half-width", dest="half_width", type=float, default=20.0)
    e.add_argument("--t", type=float, default=0.1)
    e.add_argument("--dt", type=float, default=0.005)
    e.add_argument("--records", type=int, default=10)
    e.add_argument("--csv", help="per-record invariant CSV")
    e.add_argument("--snapshot", help="binary snapshot of the final field")
    e.set_defaults(func=cmd_evolve)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"hierarchia: error: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        sys.stderr.write(f"hierarchia: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
