"""Fair lottery policies over kidney-exchange plans via column generation
on conic master programs."""

from .colgen import ColGenParams, Lottery, SchemeRun, run_scheme, sample_plan
from .errors import KepError
from .instance import Caps, Instance, generate_instance, parse_instance, write_instance
from .metrics import SchemeReport, build_report
from .plans import Chain, Cycle, ExchangePlan, enumerate_plans
from .schemes import FairnessConcept, RefPoint, SchemeKind

__all__ = [
    "Caps",
    "Chain",
    "ColGenParams",
    "Cycle",
    "ExchangePlan",
    "FairnessConcept",
    "Instance",
    "KepError",
    "Lottery",
    "RefPoint",
    "SchemeKind",
    "SchemeReport",
    "SchemeRun",
    "build_report",
    "enumerate_plans",
    "generate_instance",
    "parse_instance",
    "run_scheme",
    "sample_plan",
    "write_instance",
]

__version__ = "0.1.0"
