"""Command-line entry point.

Every subcommand returns (exit code, payload, rows); payloads are written as
JSON with a header echoing the run configuration, rows as CSV with the same
header as comment lines.
"""
import argparse
import cmath
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from cohomology import betti_numbers, square_norm_residual
from config import DEFAULT_SEED, DENSE_DIM_CAP, TOLERANCES
from hamiltonian import assemble
from observables import KINDS, MODES, fidelity_scan, lbf, overlap, parity_case
from operators import SuperchargeSpec, magnetisation, parity
from qcore import SusyChainError, normalised_component_conjecture
from report import json_default, make_header, run_report
from settings_manager import SettingsManager
from spectra import bottom_spectrum, cached_zero_energy_state, full_spectrum, scan_rho
from verify import identity_label, run_identity_suite

logger = logging.getLogger("susy_chain")

CommandResult = Tuple[int, Dict[str, Any], List[Dict[str, Any]]]


@dataclass
class RunConfig:
    subcommand: str
    ell: int = 1
    y: complex = 0j
    j: Optional[int] = None
    k: Optional[int] = None
    L: int = 4
    L_max: int = 6
    output_format: str = "json"
    output: Optional[str] = None
    seed: int = DEFAULT_SEED
    samples: int = 20
    tolerances: Dict[str, float] = field(default_factory=dict)
    options: Dict[str, Any] = field(default_factory=dict)

    def echo(self) -> Dict[str, Any]:
        data = asdict(self)
        data["y"] = [self.y.real, self.y.imag]
        return data


def parse_complex(text: str) -> complex:
    """'a+bi' / 'a+bj' rectangular or 'rho:theta' polar."""
    text = str(text).strip().replace(" ", "")
    try:
        if ":" in text:
            rho, theta = text.split(":")
            return complex(cmath.rect(float(rho), float(theta)))
        return complex(text.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid complex value {text!r}; use a+bi or rho:theta")


def parse_parts(text: str) -> Tuple[int, ...]:
    try:
        parts = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid partition {text!r}; use comma-separated integers")
    if not parts or any(v < 0 for v in parts):
        raise argparse.ArgumentTypeError(f"partition parts must be non-negative: {text!r}")
    return parts


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ell", type=positive_int, help="twice the spin")
    common.add_argument("--y", type=parse_complex, help="deformation parameter, a+bi or rho:theta")
    common.add_argument("--j", type=int, help="left boundary label (0..ell+1)")
    common.add_argument("--k", type=int, help="right boundary label (0..ell+1)")
    common.add_argument("--format", dest="output_format", choices=["json", "csv"])
    common.add_argument("--output", help="output path (default: stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    for name in TOLERANCES:
        common.add_argument(f"--tol-{name.replace('_', '-')}", dest=f"tol_{name}", type=float)

    parser = argparse.ArgumentParser(prog="susy-chain", description="Supersymmetric XXZ spin chains")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the identity battery")
    p.add_argument("--L-max", dest="L_max", type=positive_int)
    p.add_argument("--samples", type=positive_int)
    p.add_argument("--amk-scale", type=float, default=1.0, help=argparse.SUPPRESS)

    p = sub.add_parser("spectrum", parents=[common], help="Hamiltonian spectrum")
    p.add_argument("--L", type=positive_int)
    p.add_argument("--count", type=positive_int, default=6, help="eigenvalues above the dense cap")

    p = sub.add_parser("scan", parents=[common], help="spectra over a grid of |y|")
    p.add_argument("--L", type=positive_int)
    p.add_argument("--param", choices=["rho"], default="rho")
    p.add_argument("--from", dest="start", type=float, default=0.0)
    p.add_argument("--to", dest="stop", type=float, default=2.0)
    p.add_argument("--steps", type=positive_int, default=50)
    p.add_argument("--theta", type=float, default=0.0)

    p = sub.add_parser("ground", parents=[common], help="zero-energy state at y=0")
    p.add_argument("--L", type=positive_int)

    p = sub.add_parser("cohomology", parents=[common], help="Betti numbers")
    p.add_argument("--L-max", "--Lmax", dest="L_max", type=positive_int)
    p.add_argument("--hodge", action="store_true", help="also count zero modes of H")

    p = sub.add_parser("overlap", parents=[common], help="scalar products and sum rules")
    p.add_argument("--kind", choices=list(KINDS), default="Z")
    p.add_argument("--parts", type=parse_parts, required=True)

    p = sub.add_parser("fidelity", parents=[common], help="logarithmic bipartite fidelity")
    p.add_argument("--L1", type=positive_int, required=True)
    p.add_argument("--L2", type=positive_int, required=True)
    p.add_argument("--mode", choices=list(MODES), default="conjectured")

    p = sub.add_parser("fidelity-scan", parents=[common], help="fidelity over cut positions")
    p.add_argument("--L", type=positive_int)
    p.add_argument("--x-steps", dest="x_steps", type=positive_int)
    p.add_argument("--mode", choices=list(MODES), default="conjectured")

    p = sub.add_parser("report", parents=[common], help="reproduction bundle")
    p.add_argument("--L-max", dest="L_max", type=positive_int)
    p.add_argument("--fidelity-L", dest="fidelity_L", type=positive_int)
    p.add_argument("--x-steps", dest="x_steps", type=positive_int)
    p.add_argument("--hodge", action="store_true")
    return parser


def build_config(args: argparse.Namespace, settings: SettingsManager) -> RunConfig:
    """CLI flags over persisted settings over built-in defaults."""
    def pick(name: str, key: Optional[str] = None):
        value = getattr(args, name, None)
        return settings.get(key or name) if value is None else value

    tolerances = dict(settings.get("tolerances") or {})
    for name in TOLERANCES:
        value = getattr(args, f"tol_{name}", None)
        if value is not None:
            tolerances[name] = value

    reserved = {"subcommand", "ell", "y", "j", "k", "L", "L_max", "output_format", "output",
                "seed", "samples", "log_level"}
    options = {key: value for key, value in vars(args).items()
               if key not in reserved and not key.startswith("tol_")}
    for key in ("fidelity_L", "x_steps"):
        if key in options and options[key] is None:
            options[key] = settings.get(key)

    seed = pick("seed")
    return RunConfig(
        subcommand=args.subcommand,
        ell=int(pick("ell")),
        y=args.y if args.y is not None else parse_complex(settings.get("y", "0")),
        j=pick("j"),
        k=pick("k"),
        L=int(pick("L")),
        L_max=int(pick("L_max")),
        output_format=pick("output_format"),
        output=args.output,
        seed=DEFAULT_SEED if seed is None else int(seed),
        samples=int(pick("samples", "verify_samples")),
        tolerances=tolerances,
        options=options,
    )


def render_verify_table(report_dict: Dict[str, Any], console: Console) -> None:
    table = Table(title=f"Identity battery, ell={report_dict['ell']}")
    table.add_column("identity")
    table.add_column("worst residual", justify="right")
    table.add_column("tolerance", justify="right")
    table.add_column("status")
    for entry in report_dict["identities"]:
        status = "[green]ok[/green]" if entry["passed"] else "[red]FAIL[/red]"
        table.add_row(entry["label"], f"{entry['residual']:.2e}", f"{entry['tolerance']:.0e}", status)
    console.print(table)


def cmd_verify(config: RunConfig) -> CommandResult:
    report = run_identity_suite(
        config.ell,
        y=config.y,
        L_max=config.L_max,
        samples=config.samples,
        seed=config.seed,
        j=config.j,
        k=config.k,
        amk_scale=config.options.get("amk_scale", 1.0),
    )
    payload = report.to_dict()
    render_verify_table(payload, Console(stderr=True))
    if not report.passed:
        logger.error(f"Violated identities: {', '.join(identity_label(n) for n in report.failures)}")
    return (0 if report.passed else 1), payload, payload["identities"]


def cmd_spectrum(config: RunConfig) -> CommandResult:
    spec = SuperchargeSpec.create(config.ell, config.L, config.y, config.j, config.k)
    hs = assemble(spec)
    if spec.dim <= DENSE_DIM_CAP:
        report = full_spectrum(hs)
    else:
        report, _ = bottom_spectrum(hs, k=config.options.get("count", 6))
    payload = report.to_dict()
    payload.update(cross_residual=hs.cross_residual, hermitian_residual=hs.hermitian_residual)
    rows = [{"index": i, "eigenvalue": e} for i, e in enumerate(payload["eigenvalues"])]
    return 0, payload, rows


def cmd_scan_rho(config: RunConfig) -> CommandResult:
    opts = config.options
    j = config.ell + 1 if config.j is None else config.j
    k = config.ell + 1 if config.k is None else config.k
    table = scan_rho(config.ell, config.L, j, k, opts["start"], opts["stop"], opts["steps"], opts["theta"])
    rows = []
    for entry in table:
        row = {"rho": entry["rho"]}
        row.update({f"E{config.L}_{i}": float(e) for i, e in enumerate(entry["energies_L"])})
        row.update({f"E{config.L + 1}_{i}": float(e) for i, e in enumerate(entry["energies_L1"])})
        row.update({key: entry[key] for key in ("zero_L", "zero_L1", "doublets", "doublets_common")})
        rows.append(row)
    return 0, {"rows": rows}, rows


def cmd_ground(config: RunConfig) -> CommandResult:
    gs = cached_zero_energy_state(config.ell, config.L)
    p, psi, L = gs.spec.params, gs.vector, config.L
    payload = {
        "ell": config.ell,
        "L": L,
        "energy": gs.energy,
        "residual_q": gs.residual_q,
        "residual_qdag": gs.residual_qdag,
        "distinguished_component": gs.distinguished_component.real,
        "parity_residual": (parity(p, L) @ psi - psi).norm(),
        "magnetisation": psi.vdot(magnetisation(p, L) @ psi).real,
        "square_norm_residual": square_norm_residual(gs),
    }
    if config.ell == 1:
        payload["conjectured_component"] = normalised_component_conjecture(L)
    return 0, payload, [payload]


def cmd_cohomology(config: RunConfig) -> CommandResult:
    spec = SuperchargeSpec.create(config.ell, 1, config.y, config.j, config.k)
    payload = betti_numbers(spec, config.L_max, hodge=config.options.get("hodge", False)).to_dict()
    return 0, payload, payload["rows"]


def cmd_overlap(config: RunConfig) -> CommandResult:
    kind, parts = config.options["kind"], config.options["parts"]
    result = overlap(kind, parts, config.ell)
    payload = result.to_dict()
    if parity_case(kind, parts) == "vanishing":
        ok = abs(result.direct) < TOLERANCES["vanishing"]
    else:
        ok = result.residual < TOLERANCES["sum_rule"]
    if not ok:
        logger.error(f"Sum rule violated for {kind}{parts}: residual {result.residual:.3e}")
    row = {"kind": kind, "partition": ",".join(map(str, parts)), "direct": result.direct.real,
           "sum_rule": result.sum_rule.real, "residual": result.residual}
    return (0 if ok else 1), payload, [row]


def cmd_fidelity(config: RunConfig) -> CommandResult:
    opts = config.options
    result = lbf(opts["L1"], opts["L2"], opts["mode"])
    payload = {
        "L1": result.L1,
        "L2": result.L2,
        "x": result.x,
        "mode": result.mode,
        "defined": result.defined,
        "Z": result.Z,
        "F": result.F if result.defined else None,
        "prediction": result.prediction,
        "deviation": result.deviation if result.defined else None,
    }
    return 0, payload, [payload]


def cmd_fidelity_scan(config: RunConfig) -> CommandResult:
    opts = config.options
    rows = fidelity_scan(config.L, opts["x_steps"], opts["mode"])
    return 0, {"rows": rows}, rows


def cmd_report(config: RunConfig) -> CommandResult:
    def progress_cb(phase, message, content):
        if message:
            logger.info(message.strip())

    sections = run_report(
        ell=config.ell,
        L_max=config.L_max,
        y=config.y,
        j=config.j,
        k=config.k,
        fidelity_L=config.options["fidelity_L"],
        x_steps=config.options["x_steps"],
        hodge=config.options.get("hodge", False),
        progress_cb=progress_cb,
    )
    rows = [{"section": name, "status": body["status"]} for name, body in sections.items()]
    return 0, {"sections": sections}, rows


COMMANDS: Dict[str, Callable[[RunConfig], CommandResult]] = {
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "scan": cmd_scan_rho,
    "ground": cmd_ground,
    "cohomology": cmd_cohomology,
    "overlap": cmd_overlap,
    "fidelity": cmd_fidelity,
    "fidelity-scan": cmd_fidelity_scan,
    "report": cmd_report,
}


def render(config: RunConfig, payload: Dict[str, Any], rows: List[Dict[str, Any]]) -> str:
    header = make_header(config.echo())
    if config.output_format == "json":
        return json.dumps({"header": header, **payload}, indent=2, default=json_default) + "\n"

    buffer = io.StringIO()
    for key in ("version", "timestamp"):
        buffer.write(f"# {key}: {header[key]}\n")
    buffer.write(f"# config: {json.dumps(header['config'], default=json_default)}\n")
    fieldnames: List[str] = []
    for row in rows:
        fieldnames.extend(key for key in row if key not in fieldnames)
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: json.dumps(v, default=json_default) if isinstance(v, (dict, list)) else v
                         for key, v in row.items()})
    return buffer.getvalue()


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, console=Console(stderr=True))],
        force=True,
    )
    config = build_config(args, SettingsManager())

    saved = dict(TOLERANCES)
    TOLERANCES.update(config.tolerances)
    try:
        code, payload, rows = COMMANDS[config.subcommand](config)
        _write(render(config, payload, rows), config.output)
        return code
    except SusyChainError as e:
        logger.error(f"{config.subcommand} failed: {e}")
        return 1
    finally:
        TOLERANCES.clear()
        TOLERANCES.update(saved)
