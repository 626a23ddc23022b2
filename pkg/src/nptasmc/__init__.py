"""Statistical model checking for networks of priced timed automata."""

from .engine import Run, Step, delay_distribution, random_run, sample_delay, sample_output, substream
from .model import (ModelDocument, NetworkModel, NetworkState, ValidationError, advance, enabled_outputs,
                    eval_guard, reset, syntactic_compose, validate)
from .monitor import Outcome, check_box, check_diamond
from .oracle import exact_probability
from .stats import (CompareParams, EstimateParams, SprtParams, compare, compare_param, estimate,
                    required_samples, sprt)
from .text import parse_model, parse_query, parse_run, serialize_model, serialize_run

__version__ = "0.1.0"
