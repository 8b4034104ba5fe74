"""
Reproduction Cases

The bundled worked examples run by ``majlab repro``. Each case is plain
payload data in the wire format; the runner turns it into library calls.
"""

from .errors import OutOfRange

# ══════════════════════════════════════════════════════════════════════════════
#  MAJORIZATION
# ══════════════════════════════════════════════════════════════════════════════

# normal matrices read as (Re, Im): mu = (1/2, i/2, (1+i)/2), lambda = (1, 0, i)
ARVESON_TARGET = {"n": 2, "atoms": [["1/2", "0"], ["0", "1/2"], ["1/2", "1/2"]],
                  "weights": ["1/3", "1/3", "1/3"]}
ARVESON_SOURCE = {"n": 2, "atoms": [["1", "0"], ["0", "0"], ["0", "1"]],
                  "weights": ["1/3", "1/3", "1/3"]}
ARVESON_WITNESS = [["1/2", "1/2", "0"], ["0", "1/2", "1/2"], ["1/2", "0", "1/2"]]

# spectrum of N = {0, 4i, 3-2i, -3-2i}, of A = {2, -2, 2i, -2i}
HORN_SOURCE = {"n": 2, "atoms": [["0", "0"], ["0", "4"], ["3", "-2"], ["-3", "-2"]],
               "weights": ["1/4", "1/4", "1/4", "1/4"]}
HORN_TARGET = {"n": 2, "atoms": [["2", "0"], ["-2", "0"], ["0", "2"], ["0", "-2"]],
               "weights": ["1/4", "1/4", "1/4", "1/4"]}

SIMPLEX_INSTANCES = 200
SCHUR_HORN_INSTANCES = 50
CHOQUET_PARTITIONS = 100
CONVEX_SAMPLES = 1000


# ══════════════════════════════════════════════════════════════════════════════
#  FINITE II1 MODELS
# ══════════════════════════════════════════════════════════════════════════════

SCALAR_SOURCE = {"n": 2, "atoms": [["0", "0"], ["1", "0"], ["0", "1"]],
                 "weights": ["1/2", "1/3", "1/6"]}
SCALAR_DEPTH = 5

CARPENTER_TARGET = {"n": 2, "atoms": [["1/2", "1/3"], ["1/4", "3/4"]],
                    "weights": ["1/2", "1/2"]}

ORTHOPROJ_TARGET = {"n": 2, "atoms": [["1/2", "1/4"], ["1/4", "1/2"]],
                    "weights": ["1/2", "1/2"]}

# cellwise data at resolution 6; the target averages to the source barycenter
APPROX_SOURCE_CELLS = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                       [0.001, 0.0], [0.999, 0.001], [0.0, 0.999]]
APPROX_TARGET_CELLS = [[0.30, 0.36], [0.36, 0.30], [0.33, 0.33],
                       [0.34, 0.32], [0.32, 0.34], [0.35, 0.35]]
APPROX_EPS = 0.05

# 64 irrationally spaced cells; the target averages them in blocks of 8
APPROX64_SOURCE_CELLS = [[(c + 1) * 2 ** 0.5 % 1.0] for c in range(64)]
APPROX64_TARGET_CELLS = [[sum(s[0] for s in APPROX64_SOURCE_CELLS[8 * b:8 * b + 8]) / 8]
                         for b in range(8) for _ in range(8)]


# ══════════════════════════════════════════════════════════════════════════════
#  B(H) DIAGONALS
# ══════════════════════════════════════════════════════════════════════════════

TRIANGLE = {"n": 2, "vertices": [["0", "0"], ["1", "0"], ["0", "1"]]}
CENTROID = ["1/3", "1/3"]
CONSTANT_SIZES = [300, 1200]
CONSTANT_LIMITS = {300: 0.01, 1200: 0.0025}

FINITE_SIZE = 300
FINITE_VALUES = [["1/2", "1/4"], ["1/3", "1/3"], ["1/4", "1/2"]]

SEGMENT = {"n": 1, "vertices": [["0"], ["1"]]}
INDEX_CHECKS = [
    {"name": "integer shift", "phi": [0], "prefix": [["1"]], "present": True},
    {"name": "half shift", "phi": [0], "prefix": [["-1/2"]], "present": False},
]


# ══════════════════════════════════════════════════════════════════════════════
#  INFLATION OBSTRUCTION
# ══════════════════════════════════════════════════════════════════════════════

IRRATIONAL_A = 2 ** -0.5
IRRATIONAL_M = 10


CASES = {
    "arveson3x3": {"target": ARVESON_TARGET, "source": ARVESON_SOURCE, "witness": ARVESON_WITNESS},
    "horn": {"target": HORN_TARGET, "source": HORN_SOURCE},
    "simplex": {"instances": SIMPLEX_INSTANCES},
    "scalar": {"source": SCALAR_SOURCE, "depth": SCALAR_DEPTH},
    "schur-horn": {"target": ARVESON_TARGET, "source": ARVESON_SOURCE},
    "schur-horn-random": {"instances": SCHUR_HORN_INSTANCES},
    "approx": {"target_cells": APPROX_TARGET_CELLS, "source_cells": APPROX_SOURCE_CELLS,
               "eps": APPROX_EPS},
    "approx-64": {"target_cells": APPROX64_TARGET_CELLS, "source_cells": APPROX64_SOURCE_CELLS,
                  "eps": APPROX_EPS},
    "properties": {"target": ARVESON_TARGET, "source": ARVESON_SOURCE,
                   "partitions": CHOQUET_PARTITIONS, "samples": CONVEX_SAMPLES},
    "carpenter": {"target": CARPENTER_TARGET},
    "orthoproj": {"target": ORTHOPROJ_TARGET},
    "bh-constant": {"vertices": TRIANGLE, "point": CENTROID, "sizes": CONSTANT_SIZES,
                    "limits": CONSTANT_LIMITS},
    "bh-finite": {"vertices": TRIANGLE, "values": FINITE_VALUES, "size": FINITE_SIZE},
    "index": {"vertices": SEGMENT, "checks": INDEX_CHECKS},
    "irrational": {"a": IRRATIONAL_A, "m": IRRATIONAL_M},
}


def get_case(case_id: str) -> dict:
    """
    Get the payload data of a bundled case.

    Args:
        case_id: One of CASES, e.g. "arveson3x3"

    Returns:
        The case dictionary (not a copy; do not mutate)
    """
    if case_id not in CASES:
        raise OutOfRange(f"unknown case {case_id!r}; known: {', '.join(CASES)}")
    return CASES[case_id]


def get_all_case_ids() -> list[str]:
    return list(CASES)
