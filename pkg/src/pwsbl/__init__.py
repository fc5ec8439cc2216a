"""Bundle-level methods for piecewise smooth nonsmooth optimization."""

from .kernels import BACKEND as KERNEL_BACKEND
from .adaptive import pf_bl_mu, pf_ippm
from .bundle import run_bl
from .certify import WCertificate, wcert_search
from .gapred import bl_mu, gap_reduction
from .harness import load_config, run_experiment
from .proximal import ippm, moreau_residual

__version__ = "0.1.0"
__all__ = [
    "KERNEL_BACKEND",
    "WCertificate",
    "bl_mu",
    "gap_reduction",
    "ippm",
    "load_config",
    "moreau_residual",
    "pf_bl_mu",
    "pf_ippm",
    "run_bl",
    "run_experiment",
    "wcert_search",
    "__version__",
]
