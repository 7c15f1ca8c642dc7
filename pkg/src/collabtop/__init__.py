"""Collaborative top-m arm identification across K agents and one coordinator."""

from .core import (
    IID,
    NONIID,
    DegenerateInstanceError,
    GapProfile,
    Instance,
    NonIIDInstance,
    RoundSchedule,
    compute_gaps,
    global_means,
    num_rounds,
    round_schedule,
    success_bound,
    top_m,
)
from .fabric import BROADCAST, COORDINATOR, OUTPUT, Fabric, Message, Transcript
from .hashing import PolyHash, is_balanced, partition, sample_hash
from .harness import ExperimentConfig, TrialRecord, emit_csv, read_csv, run_trials
from .iid import IIDProtocol, Outcome, run_iid
from .noniid import disj, disj_instance, run_noniid, uniform_baseline
from .ratings import ingest_ratings
from .search import balanced_pull_dist, collab_search, elim_decide

__all__ = [name for name in dir() if not name.startswith("_")]
