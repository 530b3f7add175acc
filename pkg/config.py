import os
import json

import psutil

VERSION = "0.4.0"


def _load_env_json(key, default):
    raw = os.getenv(key, "")
    if not raw:
        return default
    try:
        return json.loads(raw)
    except Exception:
        return default


def _default_threads() -> int:
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, int(cores))


# Tolerance classes; the CLI exposes each as --tol-<name>.
TOLERANCES = {
    "identity": 1e-11,
    "zero": 1e-8,
    "rank_cutoff": 1e-9,
    "rank_band_low": 1e-11,
    "rank_band_high": 1e-7,
    "sum_rule": 1e-9,
    "vanishing": 1e-10,
    "hermitian": 1e-12,
    "eigen_residual": 1e-9,
    "doublet": 1e-9,
    "certificate": 1e-9,
}
TOLERANCES.update(_load_env_json("SUSYCHAIN_TOLERANCES_JSON", {}))

SOLVER_FALLBACK_ORDER = _load_env_json(
    "SUSYCHAIN_SOLVER_FALLBACK_JSON",
    {
        "dense": ["shift_invert", "lanczos"],
        "shift_invert": ["lanczos", "lobpcg"],
        "lanczos": ["lobpcg"],
        "lobpcg": [],
    },
)

PROGRESS_MESSAGES = {
    "start": "Building report...\n",
    "betti": "Section 1/6: Betti numbers\n",
    "betti_done": "Betti numbers complete.\n\n",
    "ground_states": "Section 2/6: Ground-state components\n",
    "ground_states_done": "Ground-state components complete.\n\n",
    "conjecture": "Section 3/6: Component conjecture\n",
    "conjecture_done": "Component conjecture complete.\n\n",
    "first_excited": "Section 4/6: First excited states\n",
    "first_excited_done": "First excited states complete.\n\n",
    "overlaps": "Section 5/6: Scalar products\n",
    "overlaps_done": "Scalar products complete.\n\n",
    "fidelity": "Section 6/6: Bipartite fidelity\n",
    "fidelity_done": "Bipartite fidelity complete.\n\n",
    "complete": "Report complete.\n\n",
}

DENSE_DIM_CAP = int(os.getenv("SUSYCHAIN_DENSE_DIM_CAP", "4096"))
# Ground states below this dimension are taken from a dense eigh.
DENSE_GROUND_CAP = int(os.getenv("SUSYCHAIN_DENSE_GROUND_CAP", "256"))
THREADS = int(os.getenv("SUSYCHAIN_THREADS", str(_default_threads())))
DEFAULT_SEED = int(os.getenv("SUSYCHAIN_SEED", "20240611"))
GROUND_CACHE_SIZE = int(os.getenv("SUSYCHAIN_GROUND_CACHE_SIZE", "64"))
