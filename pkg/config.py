import logging
import os

from dotenv import load_dotenv

load_dotenv()

logging.basicConfig(
    level=os.environ.get("IDLDP_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

APP_TITLE = "ID-LDP Workbench"
APP_DESCRIPTION = "Optimal perturbation, frequency estimation and privacy audits for input-discriminative LDP"
APP_VERSION = "1.0.0"

# Results store; empty disables persistence
DATABASE_URL = os.environ.get("IDLDP_DATABASE_URL", "")

# Relative tolerance on every audited ratio
AUDIT_TOLERANCE = 1e-9

# Joint outcomes a brute-force audit may enumerate
ENUMERATION_CAP = int(os.environ.get("IDLDP_ENUMERATION_CAP", str(2 ** 22)))

# Item-set audits enumerate every subset of the small domain
ITEMSET_AUDIT_MAX_ITEMS = 4
ITEMSET_AUDIT_MAX_PADDING = 2

# Interior margin keeping a, b away from 0 and 1 inside the solvers
PROBABILITY_MARGIN = 1e-6

DEFAULT_SEED = 0
DEFAULT_THREADS = int(os.environ.get("IDLDP_THREADS", "1"))

CSV_SCHEMA_VERSION = 1
