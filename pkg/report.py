"""One-shot reproduction bundle, built section by section with progress callbacks."""
import datetime
import logging
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from cohomology import betti_numbers, special_component_residual, square_norm_residual
from config import PROGRESS_MESSAGES, TOLERANCES, VERSION
from observables import admissible_partitions, component_asymptotics, component_conjecture, fidelity_scan, lbf, overlap
from operators import SuperchargeSpec, magnetisation, parity
from spectra import cached_zero_energy_state, first_excited_check

logger = logging.getLogger("susy_chain")

SECTIONS = ("betti", "ground_states", "conjecture", "first_excited", "overlaps", "fidelity")
ELL1_ONLY = ("conjecture", "first_excited", "fidelity")


def json_default(value: Any) -> Any:
    """``default=`` hook for json.dumps: complex as [re, im], numpy scalars and arrays as Python."""
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def make_header(config: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "version": VERSION,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "tolerances": dict(TOLERANCES),
    }


def _emit_progress(progress_cb: Optional[Callable], phase: str, content: Optional[str] = None) -> None:
    if progress_cb:
        progress_cb(phase, PROGRESS_MESSAGES.get(phase, ""), content)


def betti_section(ell: int, L_max: int, y: complex, j: Optional[int], k: Optional[int],
                  hodge: bool) -> Dict[str, Any]:
    spec = SuperchargeSpec.create(ell, 1, y, j, k)
    return betti_numbers(spec, L_max, hodge=hodge).to_dict()


def ground_state_section(ell: int, L_max: int) -> List[Dict[str, Any]]:
    rows = []
    for L in range(1, L_max + 1):
        gs = cached_zero_energy_state(ell, L)
        p = gs.spec.params
        psi = gs.vector
        row = {
            "L": L,
            "energy": gs.energy,
            "residual_q": gs.residual_q,
            "residual_qdag": gs.residual_qdag,
            "distinguished_component": gs.distinguished_component.real,
            "parity_residual": (parity(p, L) @ psi - psi).norm(),
            "magnetisation": psi.vdot(magnetisation(p, L) @ psi).real,
            "square_norm_residual": square_norm_residual(gs),
        }
        if L % 2 == 0:
            row["special_component_residual"] = special_component_residual(gs)
        rows.append(row)
    return rows


def conjecture_section(L_max: int) -> List[Dict[str, Any]]:
    rows = []
    for L in range(1, L_max + 1):
        n, kind = ((L + 1) // 2, "odd") if L % 2 else (L // 2, "even")
        check = component_conjecture(n, kind)
        rows.append({"L": check.L, "predicted": check.predicted, "measured": check.measured,
                     "residual": check.residual, "asymptotic": component_asymptotics(n, kind)})
    return rows


def first_excited_section(L_max: int) -> List[Dict[str, Any]]:
    """Odd lengths 3..L_max; each row is reported, never asserted."""
    return [first_excited_check(L) for L in range(3, L_max + 1, 2)]


def overlap_section(ell: int, L_max: int, m_max: int = 4) -> Dict[str, Any]:
    entries = []
    for kind in ("Z", "Ztilde"):
        for parts in admissible_partitions(L_max, m_max, kind):
            entries.append(overlap(kind, parts, ell).to_dict())
    return {
        "entries": entries,
        "max_residual": max((e["residual"] for e in entries), default=0.0),
        "tolerance": TOLERANCES["sum_rule"],
    }


def fidelity_section(L_max: int, fidelity_L: int, x_steps: int) -> Dict[str, Any]:
    measured = []
    for L1 in range(1, L_max):
        result = lbf(L1, L_max - L1, "measured")
        if result.defined:
            measured.append({"L1": L1, "L2": L_max - L1, "F": result.F,
                             "prediction": result.prediction, "deviation": result.deviation})
    return {"measured": measured, "conjectured": fidelity_scan(fidelity_L, x_steps, "conjectured")}


def run_report(ell: int = 1, L_max: int = 8, y: complex = 0j, j: Optional[int] = None,
               k: Optional[int] = None, fidelity_L: int = 200, x_steps: int = 9, hodge: bool = False,
               progress_cb: Optional[Callable] = None) -> Dict[str, Any]:
    """Build every section; a failing section is recorded and the bundle still returned."""
    builders = {
        "betti": lambda: betti_section(ell, L_max, y, j, k, hodge),
        "ground_states": lambda: ground_state_section(ell, L_max),
        "conjecture": lambda: conjecture_section(L_max),
        "first_excited": lambda: first_excited_section(L_max),
        "overlaps": lambda: overlap_section(ell, L_max),
        "fidelity": lambda: fidelity_section(L_max, fidelity_L, x_steps),
    }
    sections: Dict[str, Any] = {}
    _emit_progress(progress_cb, "start")

    for name in SECTIONS:
        _emit_progress(progress_cb, name)
        if name in ELL1_ONLY and ell != 1:
            sections[name] = {"status": "not applicable", "reason": f"ell={ell}; defined for ell=1 only"}
        else:
            try:
                sections[name] = {"status": "ok", "data": builders[name]()}
            except Exception as e:
                logger.error(f"Report section {name} failed: {e}")
                sections[name] = {"status": "error", "message": str(e)}
        _emit_progress(progress_cb, f"{name}_done", sections[name]["status"])

    _emit_progress(progress_cb, "complete")
    return sections
