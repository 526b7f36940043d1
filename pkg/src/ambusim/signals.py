"""Signal controller state machine with ambulance priority maneuvers.

A controller cycles phases normally until an ambulance is detected upstream.
A detection on a green approach whose remaining green G_K is shorter than the
predicted arrival time t_d extends the green by G'_A = t_d - G_K + margin, so
G_K + G'_A > t_d. A detection on a red approach truncates the running phase
at its green-minimum floor, runs the intergreen, and opens the ambulance's
phase. A granted priority is cleared only by the holder crossing the stop
line; later requests wait in a FIFO queue.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum


class SignalError(Exception):
    """Base class for controller failures."""


class UnknownApproach(SignalError):
    pass


class PriorityConflict(SignalError):
    """One vehicle asked for priority on two different approaches."""


class Mode(str, Enum):
    NORMAL = "Normal"
    EXTENDED = "Extended"
    PREEMPT_PENDING = "PreemptPending"
    INTERGREEN = "Intergreen"


class Color(str, Enum):
    GREEN = "Green"
    RED = "Red"


@dataclass(frozen=True)
class Phase:
    id: str
    served_approaches: frozenset[str]
    green_min_s: float
    green_nominal_s: float
    green_max_s: float

    def __post_init__(self) -> None:
        if not self.served_approaches:
            raise ValueError(f"phase {self.id}: serves no approach")
        if not 0 < self.green_min_s <= self.green_nominal_s <= self.green_max_s:
            raise ValueError(f"phase {self.id}: need 0 < min <= nominal <= max green")


@dataclass(frozen=True)
class PhasePlan:
    phases: tuple[Phase, ...]
    intergreen_s: float
    clearance_margin_s: float = 1.0
    extension_ceiling_s: float = 300.0

    def __post_init__(self) -> None:
        if len(self.phases) < 2:
            raise ValueError("phase plan needs at least two phases")
        if self.intergreen_s < 0:
            raise ValueError("intergreen_s must be >= 0")
        ids = [p.id for p in self.phases]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate phase ids")
        seen: set[str] = set()
        for p in self.phases:
            if seen & p.served_approaches:
                raise ValueError("an approach is served by two phases")
            seen |= p.served_approaches

    def phase(self, phase_id: str) -> Phase:
        for p in self.phases:
            if p.id == phase_id:
                return p
        raise ValueError(f"unknown phase {phase_id}")

    def next_phase_id(self, phase_id: str) -> str:
        ids = [p.id for p in self.phases]
        return ids[(ids.index(phase_id) + 1) % len(ids)]

    def phase_for_approach(self, approach: str) -> Phase:
        for p in self.phases:
            if approach in p.served_approaches:
                return p
        raise UnknownApproach(approach)


@dataclass(frozen=True)
class PriorityRequest:
    vehicle: str
    approach: str
    t_d_s: float
    issued_at_s: float

    def __post_init__(self) -> None:
        if self.t_d_s <= 0:
            raise ValueError("t_d_s must be > 0")


@dataclass(frozen=True)
class ControllerState:
    current_phase: str
    phase_elapsed_s: float
    mode: Mode
    active_priority: PriorityRequest | None
    remaining_green_s: float
    granted_extension_s: float = 0.0
    queued: tuple[PriorityRequest, ...] = ()
    # Intergreen exit target; also the retarget slot for a preemption that
    # lands while the controller is already between phases.
    upcoming_phase: str | None = None
    # phase_elapsed_s value at which a preempted phase gives way
    preempt_switch_at_s: float | None = None


def initial_state(plan: PhasePlan) -> ControllerState:
    first = plan.phases[0]
    return ControllerState(
        current_phase=first.id,
        phase_elapsed_s=0.0,
        mode=Mode.NORMAL,
        active_priority=None,
        remaining_green_s=first.green_nominal_s,
    )


def remaining_green(state: ControllerState, plan: PhasePlan) -> float:
    """G_K: green time left in the current phase, extension included."""
    nominal = plan.phase(state.current_phase).green_nominal_s
    return max(0.0, nominal - state.phase_elapsed_s) + state.granted_extension_s


def signals(state: ControllerState, plan: PhasePlan) -> dict[str, Color]:
    """Current per-approach aspect; all red between phases."""
    colors: dict[str, Color] = {}
    current = plan.phase(state.current_phase)
    for p in plan.phases:
        for approach in p.served_approaches:
            green = state.mode is not Mode.INTERGREEN and p.id == current.id
            colors[approach] = Color.GREEN if green else Color.RED
    return colors


def _refresh_remaining(state: ControllerState, plan: PhasePlan) -> ControllerState:
    return replace(state, remaining_green_s=remaining_green(state, plan))


def on_detection(state: ControllerState, plan: PhasePlan, req: PriorityRequest) -> ControllerState:
    """Register an ambulance detection and grant or queue its priority."""
    plan.phase_for_approach(req.approach)
    holder = state.active_priority
    if holder is not None:
        if holder.vehicle == req.vehicle:
            if holder.approach == req.approach:
                return state  # repeat detection of the same run: keep first grant
            raise PriorityConflict(
                f"{req.vehicle} already holds priority on {holder.approach}"
            )
        if any(q.vehicle == req.vehicle for q in state.queued):
            return state
        return replace(state, queued=state.queued + (req,))

    if signals(state, plan)[req.approach] is Color.GREEN:
        g_k = remaining_green(state, plan)
        if req.t_d_s <= g_k:
            return replace(state, active_priority=req)
        extension = min(req.t_d_s - g_k + plan.clearance_margin_s, plan.extension_ceiling_s)
        return _refresh_remaining(
            replace(
                state,
                mode=Mode.EXTENDED,
                active_priority=req,
                granted_extension_s=extension,
            ),
            plan,
        )

    target = plan.phase_for_approach(req.approach).id
    if state.mode is Mode.INTERGREEN:
        # between phases already: finish the clearance, then open the
        # ambulance's phase instead of the normally scheduled one
        return replace(state, active_priority=req, upcoming_phase=target)
    current = plan.phase(state.current_phase)
    switch_at = max(state.phase_elapsed_s, current.green_min_s)
    return replace(
        state,
        mode=Mode.PREEMPT_PENDING,
        active_priority=req,
        upcoming_phase=target,
        preempt_switch_at_s=switch_at,
    )


def _holds_current_green(state: ControllerState, plan: PhasePlan) -> bool:
    if state.active_priority is None or state.mode is Mode.INTERGREEN:
        return False
    current = plan.phase(state.current_phase)
    return state.active_priority.approach in current.served_approaches


def _enter_phase(state: ControllerState, plan: PhasePlan, phase_id: str) -> ControllerState:
    return _refresh_remaining(
        replace(
            state,
            current_phase=phase_id,
            phase_elapsed_s=0.0,
            mode=Mode.NORMAL,
            granted_extension_s=0.0,
            upcoming_phase=None,
            preempt_switch_at_s=None,
        ),
        plan,
    )


def _enter_intergreen(state: ControllerState, plan: PhasePlan, upcoming: str) -> ControllerState:
    if plan.intergreen_s == 0.0:
        return _enter_phase(state, plan, upcoming)
    return _refresh_remaining(
        replace(
            state,
            phase_elapsed_s=0.0,
            mode=Mode.INTERGREEN,
            granted_extension_s=0.0,
            upcoming_phase=upcoming,
            preempt_switch_at_s=None,
        ),
        plan,
    )


def tick(state: ControllerState, plan: PhasePlan, dt_s: float) -> tuple[ControllerState, dict[str, Color]]:
    """Advance the controller by one step; transitions land on tick ends."""
    if dt_s <= 0:
        raise ValueError("dt_s must be > 0")
    state = replace(state, phase_elapsed_s=state.phase_elapsed_s + dt_s)
    current = plan.phase(state.current_phase)

    if state.mode is Mode.INTERGREEN:
        if state.phase_elapsed_s >= plan.intergreen_s:
            assert state.upcoming_phase is not None
            state = _enter_phase(state, plan, state.upcoming_phase)
        else:
            state = _refresh_remaining(state, plan)
    elif state.mode is Mode.PREEMPT_PENDING:
        assert state.preempt_switch_at_s is not None and state.upcoming_phase is not None
        if state.phase_elapsed_s >= state.preempt_switch_at_s:
            state = _enter_intergreen(state, plan, state.upcoming_phase)
        else:
            state = _refresh_remaining(state, plan)
    elif _holds_current_green(state, plan):
        # a phase serving the active priority stays green until the holder
        # crosses, whatever the elapsed time says
        state = _refresh_remaining(state, plan)
    elif state.phase_elapsed_s >= current.green_nominal_s + state.granted_extension_s:
        state = _enter_intergreen(state, plan, plan.next_phase_id(state.current_phase))
    else:
        state = _refresh_remaining(state, plan)
    return state, signals(state, plan)


def on_stop_line_crossed(state: ControllerState, plan: PhasePlan, vehicle: str) -> ControllerState:
    """Release the priority held by ``vehicle``; promote the next queued one."""
    holder = state.active_priority
    if holder is None or holder.vehicle != vehicle:
        # vehicles still waiting in the queue but already through the
        # junction must not be granted a green they no longer need
        if any(q.vehicle == vehicle for q in state.queued):
            return replace(state, queued=tuple(q for q in state.queued if q.vehicle != vehicle))
        return state
    state = replace(state, active_priority=None, granted_extension_s=0.0)
    if state.mode in (Mode.EXTENDED, Mode.PREEMPT_PENDING):
        state = replace(state, mode=Mode.NORMAL, upcoming_phase=None, preempt_switch_at_s=None)
    state = _refresh_remaining(state, plan)
    if state.queued:
        nxt, rest = state.queued[0], state.queued[1:]
        state = on_detection(replace(state, queued=rest), plan, nxt)
    return state
