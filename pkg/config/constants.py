from typing import Dict, List

# Points per side of the default geometric grid
DEFAULT_GRID_POINTS: int = 512

# Fewest points per side validate_class accepts
MIN_SIDE_POINTS: int = 64

# Default working radius as a multiple of R0
XMAX_FACTOR: float = 30.0

# Margin added to every O(w^s) slope claim
SLOPE_MARGIN: float = 0.25

# Allowed growth between consecutive window maxima for "bounded" claims
BOUNDED_FACTOR: float = 2.0

# Classifier decay-exponent band treated as inconclusive
INCONCLUSIVE_BAND: float = 0.5

# |arg z| within this distance of pi counts as on the cut
BRANCH_CUT_TOL: float = 1e-12

# Largest arg jump allowed between neighbouring grid points
BRANCH_JUMP_LIMIT: float = 0.5 * 3.141592653589793

# Tail exponent of 1/sqrt|V| at or above this is the divergent variant
VARIANT_DIVERGENT_ABOVE: float = -1.02

# Tail exponent at or below this is the convergent variant
VARIANT_CONVERGENT_BELOW: float = -1.1

# Seed condition for inward integration: I1(seed) below this
SEED_I1_LIMIT: float = 0.1

# A trajectory is trusted where exp(-2 Re(xi(seed) - xi(x))) is below this
TRUST_CONTAMINATION: float = 1e-8

# Largest supported intertwiner order
MAX_INTERTWINER_ORDER: int = 6

# Relative step for finite-difference cross-checks
FD_STEP: float = 1e-5

# Recognised scenario task ids, in dependency order
TASK_IDS: List[str] = [
    "validate",
    "solve",
    "chain",
    "darboux",
    "intertwine",
    "index",
    "verify-lemma-5",
    "verify-lemma-6",
    "verify-lemma-7",
    "verify-lemma-8",
    "verify-lemma-9",
    "verify-lemma-10",
]

# Human-readable anchor shown next to each suite in the run summary
SUITE_ANCHORS: Dict[str, str] = {
    "verify-lemma-5": "Lemma 5 and Corollary 1 estimates",
    "verify-lemma-6": "Lemma 6 bounds on I1, I2, I3",
    "verify-lemma-7": "Lemma 7 consequences",
    "verify-lemma-8": "Lemma 8 series, ODE seed and Wronskian",
    "verify-lemma-9": "Lemma 9 associated chains",
    "verify-lemma-10": "Lemma 10 and Corollary 2 transformed potential",
}

# Process exit codes
EXIT_OK: int = 0
EXIT_FAILURE: int = 1
EXIT_CONFIG: int = 2
EXIT_INCONCLUSIVE: int = 3
