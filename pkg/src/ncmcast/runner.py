"""Sweep orchestration: evaluate every (receiver, scheme, Eb/N0) cell.

Produces flat result rows for the analytic engine, the Monte Carlo
engine, or both.  Cells whose model is infeasible (a trace too erased to
cover the block within the batch cap) are flagged with NA values and the
sweep continues.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelTrace, generate_trace, read_gain_trace, to_erasure_trace
from .completion import (
    AdaptivePolicy,
    CompletionModel,
    InfeasibleModelError,
    ModelParams,
    NonAdaptivePolicy,
)
from .scenario import SCHEMES, Scenario
from .simkit import SimConfig, run_multicast, run_single
from .virtualize import MulticastGroup, build_maxct, build_maxpe

RESULT_FIELDS = (
    "receiver",
    "scheme",
    "eb_n0_db",
    "delay_s",
    "throughput_pps",
    "avg_packets",
    "engine",
    "se_delay",
)

VIRTUAL_LABELS = {"maxpe": "V-MaxPe", "maxct": "V-MaxCT"}


def build_traces(scenario: Scenario) -> list[ChannelTrace]:
    """Per-receiver gain traces: from files if listed, else seeded generation."""
    if scenario.trace_files:
        return [
            read_gain_trace(path, slot_duration=scenario.packet_time_s,
                            receiver_id=label)
            for path, label in zip(scenario.trace_files, scenario.receiver_labels())
        ]
    children = np.random.SeedSequence(scenario.seed).spawn(scenario.receivers)
    return [
        generate_trace(
            scenario.lms,
            scenario.initial_state(k),
            scenario.trace_length,
            children[k],
            slot_duration=scenario.packet_time_s,
            receiver_id=k + 1,
        )
        for k in range(scenario.receivers)
    ]


def model_params(scenario: Scenario) -> ModelParams:
    return ModelParams(
        dof=scenario.dof,
        t_p=scenario.packet_time_s,
        t_w=scenario.ack_wait_s,
        ack_slot_advance=scenario.ack_slot_advance,
    )


def _row(receiver, scheme, ebn0, engine, delay=None, thr=None, packets=None,
         se=None) -> dict:
    return {
        "receiver": str(receiver),
        "scheme": scheme,
        "eb_n0_db": float(ebn0),
        "delay_s": delay,
        "throughput_pps": thr,
        "avg_packets": packets,
        "engine": engine,
        "se_delay": se,
    }


def _analytic_cell(pe_trace, params, policy, start_slot):
    model = CompletionModel(pe_trace, params, policy)
    delay = model.expected_time(start_slot=start_slot)
    packets = model.average_packets(start_slot=start_slot)
    return delay, params.dof / delay, packets


def _analytic_point(scenario: Scenario, params: ModelParams, group,
                    ebn0: float) -> list[dict]:
    rows = []
    j0 = scenario.start_slot
    labels = group.labels

    for scheme in ("nc", "anc"):
        if scheme not in scenario.schemes:
            continue
        for trace, label in zip(group.receivers, labels):
            policy = (
                NonAdaptivePolicy() if scheme == "nc" else AdaptivePolicy(trace)
            )
            try:
                delay, thr, pkts = _analytic_cell(trace, params, policy, j0)
                rows.append(_row(label, scheme, ebn0, "analytic",
                                 delay, thr, pkts, 0.0))
            except InfeasibleModelError:
                rows.append(_row(label, scheme, ebn0, "analytic"))

    for scheme in ("maxpe", "maxct"):
        if scheme not in scenario.schemes:
            continue
        try:
            virtual = (
                build_maxpe(group)
                if scheme == "maxpe"
                else build_maxct(group, params, j0)
            )
        except InfeasibleModelError:
            for label in labels:
                rows.append(_row(label, scheme, ebn0, "analytic"))
            for vscheme in ("nc", "anc"):
                rows.append(_row(VIRTUAL_LABELS[scheme], vscheme, ebn0, "analytic"))
            continue
        shared = AdaptivePolicy(virtual.pe)
        for trace, label in zip(group.receivers, labels):
            try:
                delay, thr, pkts = _analytic_cell(trace, params, shared, j0)
                rows.append(_row(label, scheme, ebn0, "analytic",
                                 delay, thr, pkts, 0.0))
            except InfeasibleModelError:
                rows.append(_row(label, scheme, ebn0, "analytic"))
        for vscheme, vpolicy in (
            ("nc", NonAdaptivePolicy()),
            ("anc", AdaptivePolicy(virtual.pe)),
        ):
            try:
                delay, thr, pkts = _analytic_cell(virtual.pe, params, vpolicy, j0)
                rows.append(_row(VIRTUAL_LABELS[scheme], vscheme, ebn0,
                                 "analytic", delay, thr, pkts, 0.0))
            except InfeasibleModelError:
                rows.append(_row(VIRTUAL_LABELS[scheme], vscheme, ebn0, "analytic"))
    return rows


def _mc_summary_row(label, scheme, ebn0, summary) -> dict:
    if summary.n_completed == 0:
        return _row(label, scheme, ebn0, "montecarlo")
    return _row(label, scheme, ebn0, "montecarlo",
                summary.delay.mean, summary.throughput.mean,
                summary.packets.mean, summary.delay.se)


def _cell_seed(scenario_seed: int, ebn0: float, scheme: str,
               receiver: int) -> tuple:
    rk = receiver if receiver >= 0 else 10**6 - receiver
    return (scenario_seed, int(round(ebn0 * 1000)) + 10**6, SCHEMES.index(scheme), rk)


def _mc_point(scenario: Scenario, params: ModelParams, group, ebn0: float,
              trials: int, workers: int) -> list[dict]:
    rows = []
    labels = group.labels

    def config(scheme, receiver) -> SimConfig:
        return SimConfig(
            trials=trials,
            seed=np.random.SeedSequence(_cell_seed(scenario.seed, ebn0, scheme,
                                                   receiver)),
            params=params,
            scheme=scheme,
            decoding=scenario.decoding,
            start_slot=scenario.start_slot,
            workers=workers,
        )

    for scheme in ("nc", "anc"):
        if scheme not in scenario.schemes:
            continue
        for trace, label in zip(group.receivers, labels):
            try:
                summary = run_single(config(scheme, label), trace)
                rows.append(_mc_summary_row(label, scheme, ebn0, summary))
            except InfeasibleModelError:
                rows.append(_row(label, scheme, ebn0, "montecarlo"))

    for scheme in ("maxpe", "maxct"):
        if scheme not in scenario.schemes:
            continue
        try:
            result = run_multicast(config(scheme, -1), group)
            for label, summary in zip(result.labels, result.per_receiver):
                rows.append(_mc_summary_row(label, scheme, ebn0, summary))
            virtual = (
                build_maxpe(group)
                if scheme == "maxpe"
                else build_maxct(group, params, scenario.start_slot)
            )
            for vscheme in ("nc", "anc"):
                summary = run_single(config(vscheme, -2), virtual.pe)
                rows.append(
                    _mc_summary_row(VIRTUAL_LABELS[scheme], vscheme, ebn0, summary)
                )
        except InfeasibleModelError:
            for label in labels:
                rows.append(_row(label, scheme, ebn0, "montecarlo"))
            for vscheme in ("nc", "anc"):
                rows.append(
                    _row(VIRTUAL_LABELS[scheme], vscheme, ebn0, "montecarlo")
                )
    return rows


def run_scenario(scenario: Scenario, engine: str = "analytic",
                 trials: int | None = None, workers: int = 1,
                 traces: list[ChannelTrace] | None = None) -> list[dict]:
    """All result rows for the scenario under the chosen engine(s)."""
    if engine not in ("analytic", "montecarlo", "both"):
        raise ValueError(f"engine must be analytic, montecarlo or both, got {engine!r}")
    if traces is None:
        traces = build_traces(scenario)
    params = model_params(scenario)
    trials = scenario.trials if trials is None else trials
    rows: list[dict] = []
    for ebn0 in scenario.eb_n0_db:
        etraces = [
            to_erasure_trace(tr, ebn0, scenario.modulation, scenario.bits_per_packet)
            for tr in traces
        ]
        group = MulticastGroup(etraces, labels=scenario.receiver_labels())
        if engine in ("analytic", "both"):
            rows.extend(_analytic_point(scenario, params, group, ebn0))
        if engine in ("montecarlo", "both"):
            rows.extend(_mc_point(scenario, params, group, ebn0, trials, workers))
    return rows


def _format_value(value) -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return "NA"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_results_csv(path, rows: list[dict]):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(RESULT_FIELDS) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(row[f]) for f in RESULT_FIELDS) + "\n")


def read_results_csv(path) -> list[dict]:
    with open(path, "r", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != ",".join(RESULT_FIELDS):
        raise ValueError(f"{path}: not a results CSV")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(RESULT_FIELDS):
            raise ValueError(f"{path}: malformed row {line!r}")
        row = dict(zip(RESULT_FIELDS, parts))
        row["eb_n0_db"] = float(row["eb_n0_db"])
        for key in ("delay_s", "throughput_pps", "avg_packets", "se_delay"):
            row[key] = None if row[key] == "NA" else float(row[key])
        rows.append(row)
    return rows
