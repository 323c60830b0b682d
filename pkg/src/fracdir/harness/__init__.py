"""Verification harness: ratio reports, suites, scenario runner and CLI."""

from .grids import Grids
from .ratio import Check, LogLogFit, RatioReport, RatioRow, exponent_check, fit_decay_exponent, loglog_fit
from .appendix import check_appendix_lemmas
from .kernel_checks import check_kernel_bounds
from .estimates import check_hardy_rellich, check_main_estimates, check_zero_exterior
from .suites import (check_decay_rate, check_delta_headline, check_exit_law, check_norms,
                     check_parabolic, check_weak_residual)
from .scenario import (COMMAND_SUITES, CONFIG_SCHEMA, SCHEMA_VERSION, SUITES, Scenario,
                       load_scenario, run_scenario, verdict_bytes)

__all__ = [
    "Grids", "Check", "LogLogFit", "RatioReport", "RatioRow", "exponent_check",
    "fit_decay_exponent", "loglog_fit", "check_appendix_lemmas", "check_kernel_bounds",
    "check_hardy_rellich", "check_main_estimates", "check_zero_exterior", "check_decay_rate",
    "check_delta_headline", "check_exit_law", "check_norms", "check_parabolic",
    "check_weak_residual", "COMMAND_SUITES", "CONFIG_SCHEMA", "SCHEMA_VERSION", "SUITES",
    "Scenario", "load_scenario", "run_scenario", "verdict_bytes",
]
