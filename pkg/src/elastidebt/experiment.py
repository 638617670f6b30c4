"""Experiment orchestration: config files, seeded runs, CSV emission, A/B compare.

A single experiment seed feeds two independent generator streams, one for
workload synthesis and one for the policy's exploration draws, so paired
runs of different policies see the identical workload.
"""

from __future__ import annotations

import csv
import hashlib
import os
import time
from dataclasses import dataclass, field, replace

from .policies import DebtAwarePolicy, LearningParams, QTable, VotingParams, VotingPolicy
from .sim import SimConfig, SimulationResult, run_simulation
from .workload import RateProfile, WorkloadTrace, default_profile, generate_trace, load_profile, parse_trace


class ConfigError(ValueError):
    """An experiment configuration is invalid or unreadable."""


def derive_seed(seed: int, stream: str) -> int:
    """Stable 63-bit sub-seed for a named generator stream."""
    digest = hashlib.sha256(f"{seed}:{stream}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class ExperimentConfig:
    """Everything one run needs: simulator, workload source, policy, seed."""

    sim: SimConfig = field(default_factory=SimConfig)
    profile: RateProfile | None = None
    trace_path: str | None = None
    policy: str = "debt-aware"  # or "voting"
    learning: LearningParams = field(default_factory=LearningParams)
    voting: VotingParams = field(default_factory=VotingParams)
    seed: int = 0
    horizon: float = 21600.0
    output_dir: str | None = None
    qtable_in: str | None = None

    def validate(self) -> None:
        self.sim.validate()
        self.learning.validate()
        self.voting.validate()
        if (self.profile is None) == (self.trace_path is None):
            raise ConfigError("exactly one workload source (profile or trace) is required")
        if self.policy not in ("debt-aware", "voting"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")


_SIM_FLOAT_KEYS = (
    "spin_up",
    "cool_down",
    "billing_cycle",
    "decision_interval",
    "vm_capacity",
    "work_per_request",
    "sla_response_limit",
    "price_per_request",
    "penalty_per_request",
    "vm_cost_per_cycle",
    "sla_target",
    "cycle_proximity",
)
_SIM_STR_KEYS = ("billing_anchor", "sla_mode")
_LEARN_FLOAT_KEYS = ("alpha_initial", "alpha_decay_step", "alpha_min", "gamma", "epsilon")
_VOTE_FLOAT_KEYS = ("lower_cpu", "upper_cpu")


def load_config(path: str) -> ExperimentConfig:
    """Read a flat ``key = value`` experiment config.

    Workload paths inside the file are resolved relative to the file's
    directory.
    """
    pairs: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                pairs[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    base = os.path.dirname(os.path.abspath(path))
    cfg = ExperimentConfig()
    try:
        for key, value in pairs.items():
            if key in _SIM_FLOAT_KEYS:
                setattr(cfg.sim, key, float(value))
            elif key in _SIM_STR_KEYS:
                setattr(cfg.sim, key, value)
            elif key == "initial_vms":
                cfg.sim.initial_vms = int(value)
            elif key in _LEARN_FLOAT_KEYS:
                setattr(cfg.learning, key, float(value))
            elif key == "alpha_decay":
                cfg.learning.alpha_decay = value
            elif key in _VOTE_FLOAT_KEYS:
                setattr(cfg.voting, key, float(value))
            elif key == "policy":
                cfg.policy = value
            elif key == "seed":
                cfg.seed = int(value)
            elif key == "horizon":
                cfg.horizon = float(value)
            elif key == "profile":
                cfg.profile = load_profile(os.path.join(base, value))
            elif key == "trace":
                cfg.trace_path = os.path.join(base, value)
            elif key == "output_dir":
                cfg.output_dir = os.path.join(base, value)
            elif key == "qtable_in":
                cfg.qtable_in = os.path.join(base, value)
            else:
                raise ConfigError(f"{path}: unknown key {key!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: bad value: {exc}") from exc
    return cfg


@dataclass
class WindowRow:
    """One report row per monitoring window."""

    time: float
    ready_vms: int
    ideal_vms: int
    submitted: int
    successes: int
    failures: int
    penalty: float
    debt: float
    window_utility: float
    cumulative_utility: float


@dataclass
class ReportTotals:
    aggregate_utility: float
    revenue: float
    penalty: float
    total_cost: float
    total_debt: float
    submitted: int
    successes: int
    failures: int
    failed_fraction: float
    adaptations: int
    vms_launched: int
    horizon: float
    policy: str
    seed: int


@dataclass
class ExperimentReport:
    rows: list[WindowRow]
    totals: ReportTotals
    wall_clock: float
    qtable_rows: list[tuple[str, str, str, float, int]] | None = None
    result: SimulationResult | None = field(default=None, repr=False)


def build_workload(config: ExperimentConfig) -> WorkloadTrace:
    """Materialize the configured workload source."""
    if config.trace_path is not None:
        try:
            with open(config.trace_path, encoding="utf-8") as fh:
                return parse_trace(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read trace {config.trace_path}: {exc}") from exc
    assert config.profile is not None
    return generate_trace(config.profile, config.horizon, derive_seed(config.seed, "workload"))


def build_policy(config: ExperimentConfig):
    if config.policy == "voting":
        return VotingPolicy(replace(config.voting))
    qtable = None
    if config.qtable_in is not None:
        qtable = load_qtable(config.qtable_in)
    return DebtAwarePolicy(
        params=replace(config.learning),
        seed=derive_seed(config.seed, "policy"),
        qtable=qtable,
    )


def run_experiment(config: ExperimentConfig, record_debt: bool = True) -> ExperimentReport:
    """Run one fully seeded experiment and assemble its report."""
    config.validate()
    workload = build_workload(config)
    policy = build_policy(config)

    started = time.perf_counter()
    result = run_simulation(config.sim, workload, policy, config.horizon, record_debt=record_debt)
    wall_clock = time.perf_counter() - started

    rows: list[WindowRow] = []
    cumulative = 0.0
    total_debt = 0.0
    for win in result.windows:
        cumulative += win.breakdown.utility
        debt = win.record.debt if win.record is not None else 0.0
        total_debt += debt
        rows.append(
            WindowRow(
                time=win.end,
                ready_vms=win.ready_vms,
                ideal_vms=win.ideal_vms,
                submitted=win.submitted,
                successes=win.breakdown.successes,
                failures=win.breakdown.failures,
                penalty=win.breakdown.penalty,
                debt=debt,
                window_utility=win.breakdown.utility,
                cumulative_utility=cumulative,
            )
        )

    failed_fraction = result.totals.failures / result.submitted if result.submitted else 0.0
    totals = ReportTotals(
        aggregate_utility=cumulative,
        revenue=result.totals.revenue,
        penalty=result.totals.penalty,
        total_cost=result.totals.vm_cost,
        total_debt=total_debt,
        submitted=result.submitted,
        successes=result.totals.successes,
        failures=result.totals.failures,
        failed_fraction=failed_fraction,
        adaptations=len(result.records),
        vms_launched=result.vms_launched,
        horizon=config.horizon,
        policy=config.policy,
        seed=config.seed,
    )
    qtable_rows = None
    if isinstance(policy, DebtAwarePolicy):
        qtable_rows = policy.qtable.rows()
    return ExperimentReport(
        rows=rows,
        totals=totals,
        wall_clock=wall_clock,
        qtable_rows=qtable_rows,
        result=result,
    )


@dataclass
class ComparisonSummary:
    utility_delta: float
    utility_delta_pct: float
    failed_fraction_delta: float
    cost_delta: float
    mean_debt_a: float
    mean_debt_b: float

    def lines(self, label_a: str = "A", label_b: str = "B") -> list[str]:
        return [
            f"utility delta ({label_a} - {label_b}): {self.utility_delta:+.6f} ({self.utility_delta_pct:+.2f}%)",
            f"failed-fraction delta: {self.failed_fraction_delta:+.6f}",
            f"cost delta: {self.cost_delta:+.6f}",
            f"mean debt per adaptation: {label_a}={self.mean_debt_a:.6f} {label_b}={self.mean_debt_b:.6f}",
        ]


def compare(a: ExperimentReport, b: ExperimentReport) -> ComparisonSummary:
    """Deltas of report A relative to report B (same workload family)."""
    if a.totals.horizon != b.totals.horizon:
        raise ValueError(
            f"mismatched horizons: {a.totals.horizon} vs {b.totals.horizon}"
        )
    ua, ub = a.totals.aggregate_utility, b.totals.aggregate_utility
    if ub != 0.0:
        pct = 100.0 * (ua - ub) / abs(ub)
    else:
        pct = 0.0 if ua == 0.0 else float("inf")
    mean_a = a.totals.total_debt / a.totals.adaptations if a.totals.adaptations else 0.0
    mean_b = b.totals.total_debt / b.totals.adaptations if b.totals.adaptations else 0.0
    return ComparisonSummary(
        utility_delta=ua - ub,
        utility_delta_pct=pct,
        failed_fraction_delta=a.totals.failed_fraction - b.totals.failed_fraction,
        cost_delta=a.totals.total_cost - b.totals.total_cost,
        mean_debt_a=mean_a,
        mean_debt_b=mean_b,
    )


# -- CSV emission -----------------------------------------------------------

_SUMMARY_FIELDS = (
    "policy",
    "seed",
    "horizon",
    "aggregate_utility",
    "revenue",
    "penalty",
    "total_cost",
    "total_debt",
    "submitted",
    "successes",
    "failures",
    "failed_fraction",
    "adaptations",
    "vms_launched",
)


def _money(x: float) -> str:
    return f"{x:.6f}"


def emit_csv(report: ExperimentReport, out_dir: str) -> list[str]:
    """Write the report's CSV files into ``out_dir`` (created if missing).

    Emits provisioning.csv, penalties.csv, debt.csv, utility.csv,
    summary.csv and, for learning runs, qtable.csv.  Money columns use six
    decimal places and files end lines with LF.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    def write(name: str, header: list[str], rows: list[list[str]]) -> None:
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    write(
        "provisioning.csv",
        ["time", "ready_vms", "ideal_vms"],
        [[f"{r.time:.3f}", str(r.ready_vms), str(r.ideal_vms)] for r in report.rows],
    )
    write(
        "penalties.csv",
        ["time", "submitted", "successes", "failures", "penalty"],
        [
            [f"{r.time:.3f}", str(r.submitted), str(r.successes), str(r.failures), _money(r.penalty)]
            for r in report.rows
        ],
    )
    write(
        "debt.csv",
        ["time", "debt"],
        [[f"{r.time:.3f}", _money(r.debt)] for r in report.rows],
    )
    write(
        "utility.csv",
        ["time", "window_utility", "cumulative_utility"],
        [
            [f"{r.time:.3f}", _money(r.window_utility), _money(r.cumulative_utility)]
            for r in report.rows
        ],
    )
    if report.qtable_rows is not None:
        # full precision so a warm start restores the table exactly
        write(
            "qtable.csv",
            ["queued_level", "billing_idle_level", "action", "q", "visits"],
            [[q, i, a, repr(v), str(n)] for q, i, a, v, n in report.qtable_rows],
        )
    t = report.totals
    write(
        "summary.csv",
        list(_SUMMARY_FIELDS),
        [
            [
                t.policy,
                str(t.seed),
                f"{t.horizon:.3f}",
                _money(t.aggregate_utility),
                _money(t.revenue),
                _money(t.penalty),
                _money(t.total_cost),
                _money(t.total_debt),
                str(t.submitted),
                str(t.successes),
                str(t.failures),
                f"{t.failed_fraction:.6f}",
                str(t.adaptations),
                str(t.vms_launched),
            ]
        ],
    )
    return written


def load_qtable(path: str) -> QTable:
    """Warm-start Q table from a previously emitted qtable.csv."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["queued_level", "billing_idle_level", "action", "q", "visits"]:
                raise ConfigError(f"{path}: not a qtable csv")
            rows = [(r[0], r[1], r[2], float(r[3]), int(r[4])) for r in reader]
    except OSError as exc:
        raise ConfigError(f"cannot read qtable {path}: {exc}") from exc
    return QTable.from_rows(rows)


def load_summary(out_dir: str) -> ReportTotals:
    """Rehydrate the totals of a previously emitted run directory."""
    path = os.path.join(out_dir, "summary.csv")
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != list(_SUMMARY_FIELDS):
                raise ConfigError(f"{path}: unexpected summary header")
            values = next(reader, None)
            if values is None:
                raise ConfigError(f"{path}: summary has no data row")
    except OSError as exc:
        raise ConfigError(f"cannot read summary {path}: {exc}") from exc
    m = dict(zip(_SUMMARY_FIELDS, values))
    return ReportTotals(
        aggregate_utility=float(m["aggregate_utility"]),
        revenue=float(m["revenue"]),
        penalty=float(m["penalty"]),
        total_cost=float(m["total_cost"]),
        total_debt=float(m["total_debt"]),
        submitted=int(m["submitted"]),
        successes=int(m["successes"]),
        failures=int(m["failures"]),
        failed_fraction=float(m["failed_fraction"]),
        adaptations=int(m["adaptations"]),
        vms_launched=int(m["vms_launched"]),
        horizon=float(m["horizon"]),
        policy=m["policy"],
        seed=int(m["seed"]),
    )


def compare_dirs(dir_a: str, dir_b: str) -> ComparisonSummary:
    """Compare two emitted run directories via their summaries."""
    ta = load_summary(dir_a)
    tb = load_summary(dir_b)
    a = ExperimentReport(rows=[], totals=ta, wall_clock=0.0)
    b = ExperimentReport(rows=[], totals=tb, wall_clock=0.0)
    return compare(a, b)


def paired_experiment(
    base: ExperimentConfig, seed: int
) -> tuple[ExperimentReport, ExperimentReport]:
    """Run debt-aware and voting on the identical workload for one seed."""
    debt_cfg = replace(base, policy="debt-aware", seed=seed)
    vote_cfg = replace(base, policy="voting", seed=seed)
    return run_experiment(debt_cfg), run_experiment(vote_cfg)


def default_config(seed: int = 0, horizon: float = 21600.0) -> ExperimentConfig:
    """Convenience config: the bundled 6-hour profile with stock parameters."""
    return ExperimentConfig(profile=default_profile(), seed=seed, horizon=horizon)
