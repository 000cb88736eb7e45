"""Synthetic ticket corpora with a planted, learnable escalation signal.

Each customer gets a latent escalation proneness (correlated with their
ticket volume, so heavy-history customers skew risky), a support-speed
multiplier, and a stream of tickets whose events realize three observable
signal families:

* time -- slow support responses (drives the response-time features);
* process -- severity bumps, especially jumps to severity 1;
* profile -- the customer's proneness, which surfaces in their realized
  escalation history and volume.

A ticket's escalation probability is a logistic function of the weighted
family scores. The intercept is calibrated by bisection so the expected
number of cause escalations matches total/(1 + target_imbalance); the
realized count is then a sum of independent draws, i.e. binomial-noisy
around that target. Setting every weight to zero yields a null corpus
whose escalations are uniform coin flips -- nothing to learn.

With cascades enabled, each cause escalation also attaches every other
ticket the customer has open at that moment (skipping already-escalated
ones), mirroring the blanket-crit practice; those extra positives come on
top of the calibrated cause count.

Output is exactly the ingest wire format, deterministic to the byte under
a fixed seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EscaladeError

BASE_TS = 27_349_920  # 2022-01-01 00:00 UTC, in epoch minutes
HORIZON_MIN = 730 * 1440  # two years of activity

# Internal scale per signal family; config weights multiply these.
_PROFILE_SCALE = 1.2
_PROCESS_SCALE = 1.2
_TIME_SCALE = 1.7

# Unobserved per-ticket luck: escalation is correlated with, not determined
# by, the planted features. Keeps classifiers honest.
_NOISE_SCALE = 1.0

_BASE_RESPONSE_MIN = 240.0  # median support response for a speed-1.0 customer


@dataclass(frozen=True, slots=True)
class GenConfig:
    """Knobs for corpus generation; see the module docstring for semantics."""

    n_customers: int = 200
    tickets_mean: float = 8.0
    tickets_dispersion: float = 0.9
    target_imbalance: float = 250.0
    cascade_enabled: bool = False
    w_profile: float = 1.0
    w_process: float = 1.0
    w_time: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_customers < 1:
            raise ValueError(f"n_customers must be >= 1, got {self.n_customers}")
        if self.tickets_mean <= 0:
            raise ValueError("tickets_mean must be positive")
        if self.tickets_dispersion < 0:
            raise ValueError("tickets_dispersion must be >= 0")
        if self.target_imbalance < 1:
            raise ValueError(f"target_imbalance must be >= 1, got {self.target_imbalance}")

    @property
    def signal_weights(self) -> dict[str, float]:
        return {"profile": self.w_profile, "process": self.w_process, "time": self.w_time}

    @classmethod
    def from_dict(cls, obj: dict) -> "GenConfig":
        """Accepts the JSON config layout (nested blocks) or flat kwargs."""
        kwargs = dict(obj)
        per_customer = kwargs.pop("tickets_per_customer", None)
        if per_customer is not None:
            kwargs["tickets_mean"] = per_customer["mean"]
            kwargs["tickets_dispersion"] = per_customer["dispersion"]
        weights = kwargs.pop("signal_weights", None)
        if weights is not None:
            kwargs["w_profile"] = weights.get("profile", 1.0)
            kwargs["w_process"] = weights.get("process", 1.0)
            kwargs["w_time"] = weights.get("time", 1.0)
        return cls(**kwargs)


@dataclass
class _Draft:
    ticket_id: str
    customer_id: str
    open_ts: int
    events: list[dict]  # wire-format dicts, seq already assigned
    closed_ts: int | None
    crit_wait_min: int  # how long after the last event an escalation would open
    logit: float
    u: float  # uniform draw deciding escalation


def _planned_severity(anger: float, initial: int) -> int | None:
    """The severity an angry (or unusually calm) customer will move to."""
    if anger > 1.0 and initial > 1:
        return 1  # straight to the top: an X-to-1 jump
    if anger > 0.3 and initial > 1:
        return initial - 1
    if anger < -1.0 and initial < 4:
        return initial + 1
    return None


def _make_ticket(
    rng: np.random.Generator,
    ticket_id: str,
    customer_id: str,
    open_ts: int,
    speed: float,
    proneness: float,
    config: GenConfig,
    support_pool: int,
) -> _Draft:
    anger = rng.normal()
    slow = speed * math.exp(rng.normal(0.0, 0.3))
    initial_sev = int(rng.choice([4, 3, 2, 1], p=[0.45, 0.35, 0.15, 0.05]))
    initial_lvl = int(rng.choice([0, 1], p=[0.3, 0.7]))

    events: list[dict] = []

    def add(ts: int, kind: str, actor: str, **extra) -> None:
        events.append(
            {
                "ticket_id": ticket_id,
                "seq": len(events),
                "ts": int(ts),
                "kind": kind,
                "actor_id": actor,
                **extra,
            }
        )

    add(
        open_ts,
        "opened",
        customer_id,
        severity=initial_sev,
        level=initial_lvl,
        customer_id=customer_id,
    )

    n_cycles = 0 if rng.random() < 0.05 else 1 + int(rng.poisson(2.5))
    planned_sev = _planned_severity(anger, initial_sev)
    sev_fire_cycle = int(rng.integers(0, n_cycles)) if planned_sev and n_cycles else -1
    cur_ts = open_ts
    cur_sev = initial_sev
    cur_lvl = initial_lvl
    n_to_1 = 0
    n_up = 0
    n_down = 0
    actors = [f"S{rng.integers(support_pool):03d}" for _ in range(int(rng.integers(1, 4)))]

    for cycle in range(n_cycles):
        cur_ts += max(30, int(rng.lognormal(7.0, 0.8)))  # ~1-3 day gaps
        add(cur_ts, "customer_msg", customer_id)
        if cycle == sev_fire_cycle and planned_sev is not None and planned_sev != cur_sev:
            add(cur_ts + 1, "severity_change", customer_id, severity=planned_sev)
            if planned_sev < cur_sev:
                n_up += 1
                if planned_sev == 1:
                    n_to_1 += 1
            else:
                n_down += 1
            cur_sev = planned_sev
        delay = max(5, int(_BASE_RESPONSE_MIN * slow * rng.lognormal(0.0, 0.35)))
        reply_ts = cur_ts + 1 + delay
        add(reply_ts, "support_msg", actors[int(rng.integers(len(actors)))])
        cur_ts = reply_ts
        if cur_lvl < 3 and (anger > 0.5 or slow > 1.5) and rng.random() < 0.3:
            cur_lvl += 1
            add(cur_ts + 1, "ownership_change", actors[0], level=cur_lvl)
            cur_ts += 1

    if n_cycles == 0 and rng.random() < 0.5:
        cur_ts += max(30, int(rng.lognormal(7.0, 0.8)))
        add(cur_ts, "customer_msg", customer_id)  # unanswered so far

    tail = max(60, int(rng.lognormal(8.0, 0.7)))
    close_ts = cur_ts + tail
    closed = close_ts <= BASE_TS + int(HORIZON_MIN * 0.97)
    if closed:
        add(close_ts, "closed", customer_id)

    # An escalation, if one happens, opens after the last recorded event:
    # the customer crits while waiting in silence, or right after an
    # unsatisfying closure. Anchoring past the final event keeps escalated
    # and clean tickets structurally identical up to their last snapshot,
    # so a null corpus carries no snapshot-shape artifact to learn from.
    crit_wait = max(30, int(rng.lognormal(6.5, 0.8)))

    time_z = math.log(max(slow, 1e-9)) / 0.5
    process_z = 1.6 * n_to_1 + 0.5 * n_up - 0.5 * n_down
    logit = (
        config.w_time * _TIME_SCALE * time_z
        + config.w_process * _PROCESS_SCALE * process_z
        + config.w_profile * _PROFILE_SCALE * proneness
        + _NOISE_SCALE * rng.normal()
    )
    return _Draft(
        ticket_id=ticket_id,
        customer_id=customer_id,
        open_ts=open_ts,
        events=events,
        closed_ts=close_ts if closed else None,
        crit_wait_min=crit_wait,
        logit=logit,
        u=float(rng.random()),
    )


def _calibrate_intercept(logits: np.ndarray, target: float) -> float:
    """Bisection for b with sum(sigmoid(logit + b)) = target."""

    def expected(b: float) -> float:
        z = np.clip(logits + b, -500, 500)
        return float(np.sum(1.0 / (1.0 + np.exp(-z))))

    lo, hi = -60.0, 60.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if expected(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate(config: GenConfig) -> tuple[list[str], list[str]]:
    """Produce (event-log lines, escalation-record lines).

    Deterministic under the seed; the output always satisfies the ingest
    invariants. Raises when the requested imbalance cannot produce at
    least one expected escalation.
    """
    ss = np.random.SeedSequence(config.seed)
    children = ss.spawn(config.n_customers)

    sigma = config.tickets_dispersion
    mu = math.log(config.tickets_mean) - 0.5 * sigma * sigma

    drafts: list[_Draft] = []
    ticket_no = 0
    for c in range(config.n_customers):
        rng = np.random.default_rng(children[c])
        customer_id = f"CU{c:05d}"
        volume = int(np.clip(round(rng.lognormal(mu, sigma)), 1, 400))
        z_vol = (math.log(volume) - math.log(config.tickets_mean)) / max(sigma, 0.3)
        # Mostly volume-driven so the proneness shows up in observable
        # history (ticket counts) even when realized escalations are rare.
        proneness = float(np.clip(0.85 * z_vol + 0.45 * rng.normal(), -3.0, 3.0))
        speed = math.exp(rng.normal(0.0, 0.4))
        # opens run almost to the horizon so recent tickets are still open
        open_span = HORIZON_MIN - 7 * 1440
        opens = np.sort(rng.integers(0, open_span, size=volume)) + BASE_TS
        for open_ts in opens:
            drafts.append(
                _make_ticket(
                    rng,
                    f"T{ticket_no:06d}",
                    customer_id,
                    int(open_ts),
                    speed,
                    proneness,
                    config,
                    support_pool=60,
                )
            )
            ticket_no += 1

    n_total = len(drafts)
    target = n_total / (1.0 + config.target_imbalance)
    if target < 1.0:
        raise EscaladeError(
            f"infeasible config: {n_total} tickets at imbalance "
            f"{config.target_imbalance} expects fewer than one escalation"
        )
    logits = np.array([d.logit for d in drafts])
    intercept = _calibrate_intercept(logits, target)
    probs = 1.0 / (1.0 + np.exp(-np.clip(logits + intercept, -500, 500)))

    cause_ids = [d.ticket_id for d, p in zip(drafts, probs) if d.u < p]

    by_id = {d.ticket_id: d for d in drafts}
    by_customer: dict[str, list[_Draft]] = {}
    for d in drafts:
        by_customer.setdefault(d.customer_id, []).append(d)

    def crit_time(d: _Draft) -> int:
        return d.events[-1]["ts"] + d.crit_wait_min

    escalated: set[str] = set()
    records: list[dict] = []
    for tid in sorted(cause_ids, key=lambda t: (crit_time(by_id[t]), t)):
        if tid in escalated:
            continue  # already swept into an earlier cascade
        cause = by_id[tid]
        when = crit_time(cause)
        attached = [tid]
        if config.cascade_enabled:
            for sibling in by_customer[cause.customer_id]:
                if sibling.ticket_id == tid or sibling.ticket_id in escalated:
                    continue
                if sibling.open_ts < when and (
                    sibling.closed_ts is None or sibling.closed_ts > when
                ):
                    attached.append(sibling.ticket_id)
        escalated.update(attached)
        records.append(
            {
                "critsit_id": f"C{len(records):05d}",
                "opened_at": when,
                "ticket_ids": sorted(attached),
            }
        )

    event_lines = [
        json.dumps(event, separators=(",", ":"))
        for draft in drafts
        for event in draft.events
    ]
    record_lines = [json.dumps(r, separators=(",", ":")) for r in records]
    return event_lines, record_lines


def describe(config: GenConfig) -> str:
    """Human-readable summary of what the generator will plant."""
    lines = [
        f"customers: {config.n_customers}",
        f"tickets per customer: mean {config.tickets_mean}, "
        f"dispersion {config.tickets_dispersion}",
        f"expected tickets: ~{config.n_customers * config.tickets_mean:.0f}",
        f"imbalance: 1 escalation per {config.target_imbalance:.0f} tickets "
        f"(positives ~ total/{1 + config.target_imbalance:.0f})",
        f"cascades: {'enabled (open siblings attach to each cause)' if config.cascade_enabled else 'disabled'}",
        f"seed: {config.seed}",
    ]
    if all(w == 0 for w in config.signal_weights.values()):
        lines.append("no planted signal (null corpus): escalations are uniform coin flips")
    else:
        lines.append("planted signal families (weight x internal scale):")
        lines.append(f"  profile: {config.w_profile} x {_PROFILE_SCALE} (customer proneness)")
        lines.append(f"  process: {config.w_process} x {_PROCESS_SCALE} (severity bumps)")
        lines.append(f"  time:    {config.w_time} x {_TIME_SCALE} (slow responses)")
    return "\n".join(lines)
