"""Link-level simulator for interference steering in macro/pico downlinks."""
from .channel import (
    Antennas,
    Deployment,
    Drop,
    LinkBudget,
    budget_from_deployment,
    budget_normalized,
    drop_rng,
    make_drop,
    path_loss_mbs,
    path_loss_pbs,
    seeded_drop,
)
from .errors import ConfigError, DomainError, NumericalAssertionError, NumericalError, SteersimError
from .experiment import SweepRow, SweepSpec, load_spec, prob_overhead, run_sweep, write_csv
from .schemes import Fallback, Scheme, SchemeResult, in_scheme, is_fixed, mf, ois, zf_rx, zfbf
from .steering import (
    RhoSolution,
    dis,
    dis_joint_n2,
    dis_multi_interference,
    dis_or_fallback,
    dis_multi_stream,
    joint_rho_n2,
    optimal_rho,
    rho_max,
    sinr_dis,
)

__version__ = "0.1.0"
