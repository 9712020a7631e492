"""IGO toolkit settings: logger, defaults and output folder."""

import logging
import os


log = logging.getLogger("igo")
if not log.handlers:
    log.setLevel(logging.INFO)
    log.addHandler(logging.StreamHandler())


# Numerical defaults
BERNOULLI_EPSILON = 1e-6
CONDITION_THRESHOLD = 1e12
ENUMERATION_CUTOFF = 20
GIBBS_BURN_IN = 100
RBM_FISHER_SAMPLES = 10000
RELIABILITY_BOUNDS = (0.5, 2.0)
WEIGHT_SUM_TOLERANCE = 1e-9

# Output
OUTPUT_DIR_VARIABLE = "IGO_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "igo-output"
CSV_VERSION = "v1"


def toggle_debug_mode(enabled):
    """Switch the toolkit logger between INFO and DEBUG."""

    if enabled:
        log.setLevel(logging.DEBUG)
        log.debug("Debug mode activated.")
    else:
        log.setLevel(logging.INFO)


def get_output_folder():
    """Return the output folder, creating it if needed."""

    output_folder = os.environ.get(OUTPUT_DIR_VARIABLE) or DEFAULT_OUTPUT_DIR
    os.makedirs(output_folder, exist_ok=True)
    return output_folder
