"""Interaction state machine.

A session is an immutable `SessionState`; commands and pointer events map
(state, input) -> (state', effects). Effects are notifications for the
caller (play a chime, re-render, surface an error line); they carry no
state of their own. Every accepted input bumps `revision`, so replaying
the same inputs always yields the same revision sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence, Union

from .chart import AttrKind, AttributeSchema, ChartSpec, Dataset, MarkGeometry, hit_test
from .commands import (ClearFilters, ClearHighlights, CommandAst, CommandError, DetailsOff,
                       DetailsOn, FilterOut, Highlight, Predicate, Reset, eval_predicate,
                       predicate_attributes, predicate_from_dict, predicate_to_dict,
                       validate_predicate)
from .errors import InputError


@dataclass(frozen=True)
class SessionState:
    filters: tuple[Predicate, ...] = ()
    highlights: frozenset[int] = frozenset()
    details_enabled: bool = True
    pointer: tuple[float, float] | None = None
    focused: int | None = None
    linked_view_open: bool = False
    credential: int = 0
    revision: int = 0


@dataclass(frozen=True)
class Chime:
    """Audible confirmation that an input was accepted."""


@dataclass(frozen=True)
class StateChanged:
    """The overlay must be re-planned."""


@dataclass(frozen=True)
class Error:
    """Rejected input; the state is unchanged. Not an exception: rejected
    commands are expected traffic, not failures of the engine."""

    message: str


Effect = Union[Chime, StateChanged, Error]


@dataclass(frozen=True)
class Move:
    x: float
    y: float


@dataclass(frozen=True)
class Select:
    pass


@dataclass(frozen=True)
class Exit:
    pass


PointerEvent = Union[Move, Select, Exit]


def matching_records(dataset: Dataset, predicate: Predicate) -> frozenset[int]:
    return frozenset(rid for rid in dataset.ids() if eval_predicate(predicate, dataset.values(rid)))


def visible_records(state: SessionState, dataset: Dataset) -> frozenset[int]:
    """Dataset ids minus the union of all filter matches."""
    visible = frozenset(dataset.ids())
    for pred in state.filters:
        visible -= matching_records(dataset, pred)
    return visible


def linked_selection(state: SessionState, dataset: Dataset) -> frozenset[int]:
    """Records the linked view aggregates over: the highlighted set when one
    exists, otherwise the filtered-down visible set, otherwise nothing."""
    if state.highlights:
        return state.highlights
    if state.filters:
        return visible_records(state, dataset)
    return frozenset()


def _clearance_blocked(pred: Predicate, schema: Sequence[AttributeSchema], credential: int) -> str | None:
    by_name = {a.name: a for a in schema}
    for name in sorted(predicate_attributes(pred)):
        attr = by_name.get(name)
        if attr is not None and attr.clearance > credential:
            return name
    return None


def apply_command(state: SessionState, ast: CommandAst, dataset: Dataset,
                  ) -> tuple[SessionState, tuple[Effect, ...]]:
    if isinstance(ast, (FilterOut, Highlight)):
        try:
            validate_predicate(ast.predicate, dataset.schema)
        except CommandError as exc:
            return state, (Error(str(exc)),)
        blocked = _clearance_blocked(ast.predicate, dataset.schema, state.credential)
        if blocked is not None:
            return state, (Error(f"attribute {blocked!r} requires a higher credential"),)

    if isinstance(ast, FilterOut):
        filters = state.filters + (ast.predicate,)
        visible = visible_records(replace(state, filters=filters), dataset)
        new = replace(state, filters=filters,
                      highlights=state.highlights & visible,
                      focused=state.focused if state.focused in visible else None,
                      revision=state.revision + 1)
    elif isinstance(ast, Highlight):
        visible = visible_records(state, dataset)
        new = replace(state, highlights=state.highlights | (matching_records(dataset, ast.predicate) & visible),
                      revision=state.revision + 1)
    elif isinstance(ast, ClearFilters):
        new = replace(state, filters=(), revision=state.revision + 1)
    elif isinstance(ast, ClearHighlights):
        new = replace(state, highlights=frozenset(), revision=state.revision + 1)
    elif isinstance(ast, Reset):
        new = replace(state, filters=(), highlights=frozenset(), details_enabled=True,
                      focused=None, linked_view_open=False, revision=state.revision + 1)
    elif isinstance(ast, DetailsOn):
        new = replace(state, details_enabled=True, revision=state.revision + 1)
    elif isinstance(ast, DetailsOff):
        new = replace(state, details_enabled=False, revision=state.revision + 1)
    else:
        return state, (Error(f"unknown command {ast!r}"),)
    return new, (Chime(), StateChanged())


def pointer_event(state: SessionState, event: PointerEvent, marks: Sequence[MarkGeometry],
                  dataset: Dataset, slop_px: float = 4.0, has_linked_view: bool = False,
                  ) -> tuple[SessionState, tuple[Effect, ...]]:
    if isinstance(event, Move):
        visible = visible_records(state, dataset)
        focused = hit_test(marks, (event.x, event.y), slop_px, visible)
        new = replace(state, pointer=(event.x, event.y), focused=focused,
                      revision=state.revision + 1)
        return new, (StateChanged(),)
    if isinstance(event, Select):
        if state.focused is None:
            return state, ()
        new = replace(state, highlights=state.highlights ^ frozenset((state.focused,)),
                      linked_view_open=state.linked_view_open or has_linked_view,
                      revision=state.revision + 1)
        return new, (Chime(), StateChanged())
    if isinstance(event, Exit):
        new = replace(state, focused=None, linked_view_open=False,
                      revision=state.revision + 1)
        return new, (Chime(), StateChanged())
    raise TypeError(f"unknown pointer event {event!r}")


# ---------------------------------------------------------------------------
# detail readout


@dataclass(frozen=True)
class DetailLine:
    name: str
    text: str
    redacted: bool = False


def _format_value(value, attr: AttributeSchema) -> str:
    if attr.kind is AttrKind.QUANTITATIVE:
        v = float(value)
        text = str(int(v)) if v == int(v) and abs(v) < 1e15 else f"{v:g}"
        return f"{text} {attr.unit}" if attr.unit else text
    return str(value)


def detail_lines(state: SessionState, dataset: Dataset, spec: ChartSpec) -> tuple[DetailLine, ...]:
    """Readout for the focused record. Attributes above the session credential
    appear with a redaction marker instead of their value."""
    if state.focused is None or not state.details_enabled:
        return ()
    values = dataset.values(state.focused)
    names = spec.detail_attributes or tuple(a.name for a in dataset.schema)
    lines = []
    for name in names:
        attr = dataset.attribute(name)
        if attr.clearance > state.credential:
            lines.append(DetailLine(name=name, text="locked", redacted=True))
        else:
            lines.append(DetailLine(name=name, text=_format_value(values[name], attr)))
    return tuple(lines)


# ---------------------------------------------------------------------------
# snapshot serialization (canonical dict form used by the wire protocol and
# the scenario replay logs)


def state_to_dict(state: SessionState) -> dict:
    return {
        "filters": [predicate_to_dict(p) for p in state.filters],
        "highlights": sorted(state.highlights),
        "details_enabled": state.details_enabled,
        "pointer": None if state.pointer is None else [state.pointer[0], state.pointer[1]],
        "focused": state.focused,
        "linked_view_open": state.linked_view_open,
        "credential": state.credential,
        "revision": state.revision,
    }


def state_from_dict(doc: Mapping) -> SessionState:
    try:
        pointer = doc["pointer"]
        return SessionState(
            filters=tuple(predicate_from_dict(p) for p in doc["filters"]),
            highlights=frozenset(int(h) for h in doc["highlights"]),
            details_enabled=bool(doc["details_enabled"]),
            pointer=None if pointer is None else (float(pointer[0]), float(pointer[1])),
            focused=None if doc["focused"] is None else int(doc["focused"]),
            linked_view_open=bool(doc["linked_view_open"]),
            credential=int(doc["credential"]),
            revision=int(doc["revision"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed session snapshot: {exc}")
