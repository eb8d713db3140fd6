# execopt/reference_values.py
"""
Published benchmark values used as the reference column of `reproduce` tables.

All entries are for X=0.1, T=1, N=100 and f(v) = |v|^delta sign(v) unless a
table says otherwise. Keys are (gamma, delta).
"""

from typing import Dict, Optional, Tuple

SOURCES = {
    "costs_main": "published benchmark: VWAP/GSS/DHAM cost table (DHAM from GSS start, order 7)",
    "dham_residual": "published benchmark: minimum squared residual of the order-7 DHAM series",
    "costs_optimizers": "published benchmark: DHAM/SQP/direct-search costs, 1000 starts",
    "concave_convex": "published benchmark: concave-convex impact, gamma=0.45 delta=0.55 c=1 V=1",
    "spread": "published benchmark: SQP costs with spread penalty, gamma=0.45 delta=0.55",
    "distance_matrix": "published benchmark: distances between the four best SQP minima and VWAP, gamma=delta=0.5",
    "toy_transition": "published benchmark: sign change of the N=2 global minimizer, gamma=0.5 X=0.1",
    "dham_hbar": "published benchmark: best hbar of the order-7 residual curve, gamma=delta=0.5",
    "dang_lambda": "published benchmark: fixed-point multiplier, gamma=0.5 delta=0.95",
    "dang_vs_dham": "published benchmark: DHAM cost and fixed-point multiplier, gamma=0.5 delta=0.95",
    "landscape": "no published numbers: minima fraction, Hessian log-spread and cost spread of the multistart extrema",
}

DELTAS = (1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.6, 0.55, 0.5)

# (vwap, gss, dham)
_MAIN = {
    0.45: [(0.0117, 0.0116, 0.0116), (0.0132, 0.0130, 0.0130), (0.0148, 0.0146, 0.0143),
           (0.0166, 0.0164, 0.0162), (0.0186, 0.0184, 0.0179), (0.0209, 0.0206, 0.0198),
           (0.0234, 0.0231, 0.0218), (0.0263, 0.0260, 0.0235), (0.0295, 0.0291, 0.0251),
           (0.0331, 0.0327, 0.0275)],
    0.5: [(0.0133, 0.0132, 0.0131), (0.0150, 0.0148, 0.0148), (0.0168, 0.0166, 0.0164),
          (0.0188, 0.0186, 0.0185), (0.0211, 0.0209, 0.0204), (0.0237, 0.0234, 0.0227),
          (0.0266, 0.0263, 0.0249), (0.0298, 0.0295, 0.0274), (0.0335, 0.0331, 0.0297),
          (0.0376, 0.0372, 0.0323), (0.0422, 0.0417, 0.0347)],
}

_RESIDUALS = {
    0.45: [3.99e-9, 1.15e-8, 3.31e-8, 7.84e-8, 1.74e-7, 3.45e-7, 6.18e-7, 8.72e-7, 8.93e-7, 2.66e-6],
    0.5: [3.23e-9, 7.96e-9, 2.43e-8, 5.63e-8, 1.26e-7, 2.52e-7, 4.60e-7, 7.43e-7, 8.47e-7, 2.25e-6, 3.25e-6],
}

# (dham, sqp, direct)
_OPTIMIZERS = {
    0.45: [(0.0116, 0.0115, 0.0115), (0.0130, 0.0128, 0.0129), (0.0143, 0.0136, 0.0140),
           (0.0162, 0.0139, 0.0151), (0.0179, 0.0138, 0.0162), (0.0198, 0.0132, 0.0169),
           (0.0218, 0.0117, 0.0184), (0.0235, 0.0092, 0.0191), (0.0251, 0.0047, 0.0201),
           (0.0275, -0.0029, 0.0212)],
    0.5: [(0.0131, 0.0131, 0.0131), (0.0148, 0.0147, 0.0147), (0.0164, 0.0158, 0.0162),
          (0.0185, 0.0166, 0.0176), (0.0204, 0.0170, 0.0188), (0.0227, 0.0169, 0.0202),
          (0.0249, 0.0163, 0.0220), (0.0274, 0.0146, 0.0238), (0.0297, 0.0120, 0.0245),
          (0.0323, 0.0075, 0.0262), (0.0347, 0.0003, 0.0278)],
}


def _keyed(table) -> Dict[Tuple[float, float], tuple]:
    return {(g, DELTAS[k]): row for g, rows in table.items() for k, row in enumerate(rows)}


COSTS_MAIN: Dict[Tuple[float, float], Dict[str, float]] = {
    k: dict(zip(("vwap", "gss", "dham"), row)) for k, row in _keyed(_MAIN).items()}
DHAM_RESIDUALS: Dict[Tuple[float, float], float] = {
    (g, DELTAS[k]): e for g, rows in _RESIDUALS.items() for k, e in enumerate(rows)}
COSTS_OPTIMIZERS: Dict[Tuple[float, float], Dict[str, float]] = {
    k: dict(zip(("dham", "sqp", "direct"), row)) for k, row in _keyed(_OPTIMIZERS).items()}

CONCAVE_CONVEX_PARAMS = {"gamma": 0.45, "delta": 0.55, "c": 1.0, "market_volume": 1.0}
CONCAVE_CONVEX: Dict[float, Dict[str, float]] = {
    0.1: {"v_star": 1.0755, "mean_positive": 1.1485, "std_positive": 0.3193, "sqp_cost": -0.00245, "vwap_cost": 0.03266},
    0.5: {"v_star": 0.4256, "mean_positive": 0.4835, "std_positive": 0.0911, "sqp_cost": 0.01674, "vwap_cost": 0.03782},
    1.0: {"v_star": 0.2678, "mean_positive": 0.3229, "std_positive": 0.0443, "sqp_cost": 0.02887, "vwap_cost": 0.04428},
    2.0: {"v_star": 0.1639, "mean_positive": 0.2170, "std_positive": 0.0292, "sqp_cost": 0.04752, "vwap_cost": 0.05718},
}

SPREAD_PARAMS = {"gamma": 0.45, "delta": 0.55}
SPREAD_COSTS: Dict[float, float] = {0.5: 0.026, 0.1: 5.9e-3}

# last row/column is VWAP
DISTANCE_MATRIX = [
    [0.0, 0.0780, 0.0753, 0.0890, 0.0617],
    [0.0780, 0.0, 0.0757, 0.0757, 0.0582],
    [0.0753, 0.0757, 0.0, 0.0799, 0.0581],
    [0.0890, 0.0757, 0.0799, 0.0, 0.0576],
    [0.0617, 0.0582, 0.0581, 0.0576, 0.0],
]

TOY_TRANSITION_DELTA = 0.56

# init -> (hbar, squared residual), gamma=delta=0.5, order 7
DHAM_HBAR = {"vwap": (-60.3, 2.5e-6), "gss": (-55.7, 3.2e-6)}

DANG_LAMBDA = {(0.5, 0.95): 2.87e-3}


def lookup(table: Dict, key, field: Optional[str] = None) -> float:
    """Reference value or nan when the table has no entry."""
    row = table.get(key)
    if row is None:
        return float("nan")
    if field is None:
        return float(row)
    return float(row.get(field, float("nan")))
