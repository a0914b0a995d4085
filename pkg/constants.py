SYSTEM_DEFAULTS_FILE_NAME = "system_defaults.json"
MODEL_FORMAT_TAG = "dihmm-v1"
MODEL_FILE_SUFFIX = ".json"

DEFAULT_GAP_SYMBOL = "_"
ON_SYMBOL = "on"
OFF_SYMBOL = "off"

DEFAULT_D_CAP = 32
DEFAULT_SIGMA_FLOOR = 0.5
DEFAULT_THETA_PT = 1e-4
DEFAULT_FALLBACK_C = 0.5

PROBABILITY_TOLERANCE = 1e-9
