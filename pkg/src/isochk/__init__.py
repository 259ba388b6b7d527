"""Serializability and snapshot-isolation checking for transaction histories."""
from .history import (History, HistoryError, build_history, check_int_axiom, load_history,
                      parse_history, serialize_history)
from .hyperpolygraph import HyperPolygraph, construct
from .prune import SER, SI, prune
from .solver import Verdict
from .verify import VerifyOptions, verify
from .si import verify_si

__version__ = "0.1.0"

__all__ = ["History", "HistoryError", "build_history", "check_int_axiom", "load_history",
           "parse_history", "serialize_history", "HyperPolygraph", "construct", "SER", "SI",
           "prune", "Verdict", "VerifyOptions", "verify", "verify_si"]
