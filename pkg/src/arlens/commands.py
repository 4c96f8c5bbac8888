"""Template-grammar parser for voice-style interaction commands.

Text in, typed AST out. The grammar is closed and case-insensitive; see
docs/grammar.md for the exact EBNF and the attribute-binding rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence, Union

from .chart import AttrKind, AttributeSchema, ChartSpec, Dataset
from .errors import InputError


class CommandError(InputError):
    """Unparseable command; `matched_prefix` is the longest understood prefix."""

    def __init__(self, message: str, matched_prefix: str = ""):
        self.matched_prefix = matched_prefix
        if matched_prefix:
            message = f"{message} (matched prefix: {matched_prefix!r})"
        super().__init__(message)


class CompareOp(str, Enum):
    GT = ">"
    GE = ">="
    LT = "<"
    LE = "<="
    EQ = "="


@dataclass(frozen=True)
class Compare:
    attribute: str
    op: CompareOp
    value: float


@dataclass(frozen=True)
class CategoryIs:
    attribute: str
    category: str


@dataclass(frozen=True)
class And:
    parts: tuple["Predicate", ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("And predicate must not be empty")


@dataclass(frozen=True)
class Not:
    """Complement of a predicate; produced by 'show only' commands."""

    part: "Predicate"


Predicate = Union[Compare, CategoryIs, And, Not]


@dataclass(frozen=True)
class FilterOut:
    predicate: Predicate


@dataclass(frozen=True)
class Highlight:
    predicate: Predicate


@dataclass(frozen=True)
class ClearFilters:
    pass


@dataclass(frozen=True)
class ClearHighlights:
    pass


@dataclass(frozen=True)
class Reset:
    pass


@dataclass(frozen=True)
class DetailsOn:
    pass


@dataclass(frozen=True)
class DetailsOff:
    pass


CommandAst = Union[FilterOut, Highlight, ClearFilters, ClearHighlights, Reset, DetailsOn, DetailsOff]


CURRENCY_SYMBOLS = "$€£"
CURRENCY_UNITS = {"usd", "eur", "gbp", "$", "€", "£"}

# comparator phrase -> operator; the synonym table is exhaustive
_CMP_PHRASES: dict[tuple[str, ...], CompareOp] = {
    ("larger", "than"): CompareOp.GT,
    ("greater", "than"): CompareOp.GT,
    ("above",): CompareOp.GT,
    ("over",): CompareOp.GT,
    ("smaller", "than"): CompareOp.LT,
    ("less", "than"): CompareOp.LT,
    ("below",): CompareOp.LT,
    ("under",): CompareOp.LT,
    ("equal", "to"): CompareOp.EQ,
    ("at", "least"): CompareOp.GE,
    ("at", "most"): CompareOp.LE,
}

_CANONICAL_CMP = {
    CompareOp.GT: "larger than",
    CompareOp.LT: "smaller than",
    CompareOp.GE: "at least",
    CompareOp.LE: "at most",
    CompareOp.EQ: "equal to",
}


def parse_quantity(text: str) -> float:
    """Normalize a spoken/written quantity: currency symbols and thousands
    separators are stripped; k/K and m/M suffixes scale by 1e3 / 1e6."""
    s = text.strip()
    for sym in CURRENCY_SYMBOLS:
        s = s.replace(sym, "")
    s = s.replace(",", "")
    multiplier = 1.0
    if s[-1:] in ("k", "K"):
        multiplier, s = 1e3, s[:-1]
    elif s[-1:] in ("m", "M"):
        multiplier, s = 1e6, s[:-1]
    try:
        value = float(s)
    except ValueError:
        raise CommandError(f"not a number: {text!r}")
    value *= multiplier
    if not math.isfinite(value):
        raise CommandError(f"quantity {text!r} is not finite")
    return value


@dataclass(frozen=True)
class CommandContext:
    """Everything the parser needs to bind words to data: the schema, the
    declared synonyms, and the category vocabulary drawn from the dataset."""

    schema: tuple[AttributeSchema, ...]
    synonyms: Mapping[str, tuple[str, ...]]
    categories: Mapping[str, tuple[str, ...]]

    @classmethod
    def from_chart(cls, spec: ChartSpec, dataset: Dataset) -> "CommandContext":
        cats = {a.name: dataset.category_order(a.name)
                for a in dataset.schema if a.kind is AttrKind.CATEGORICAL}
        return cls(schema=tuple(dataset.schema), synonyms=dict(spec.synonyms), categories=cats)


def resolve_attribute(token: str, schema: Sequence[AttributeSchema],
                      synonyms: Mapping[str, Sequence[str]] | None = None) -> str:
    """Bind a word to a schema attribute: case-insensitive exact name match
    first, then the declared synonym table; ambiguity is an error."""
    folded = token.lower()
    name_hits = [a.name for a in schema if a.name.lower() == folded]
    if len(name_hits) == 1:
        return name_hits[0]
    if len(name_hits) > 1:
        raise CommandError(f"ambiguous attribute {token!r}")
    hits = []
    for attr_name, syns in (synonyms or {}).items():
        if any(s.lower() == folded for s in syns):
            hits.append(attr_name)
    if len(hits) == 1:
        return hits[0]
    if len(hits) > 1:
        raise CommandError(f"ambiguous attribute {token!r}")
    raise CommandError(f"unknown attribute {token!r}")


class _Cursor:
    """Token stream with furthest-progress tracking for error reporting."""

    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.lower = [t.lower() for t in tokens]
        self.i = 0
        self.furthest = 0

    def advance(self, n: int = 1):
        self.i += n
        self.furthest = max(self.furthest, self.i)

    def peek(self, n: int = 1) -> tuple[str, ...]:
        return tuple(self.lower[self.i:self.i + n])

    def exhausted(self) -> bool:
        return self.i >= len(self.tokens)

    def prefix(self) -> str:
        return " ".join(self.tokens[:self.furthest])

    def fail(self, message: str) -> CommandError:
        return CommandError(message, self.prefix())


def _tokenize(text: str) -> list[str]:
    tokens = text.split()
    if tokens:
        tokens[-1] = tokens[-1].rstrip(".?!")
        if not tokens[-1]:
            tokens.pop()
    return tokens


def _match_cmp(cur: _Cursor) -> CompareOp | None:
    for phrase, op in _CMP_PHRASES.items():
        if cur.peek(len(phrase)) == phrase:
            cur.advance(len(phrase))
            return op
    return None


def _lookup_category(cur: _Cursor, ctx: CommandContext, value: str) -> CategoryIs:
    folded = value.lower()
    hits = []
    for attr_name, cats in ctx.categories.items():
        for cat in cats:
            if cat.lower() == folded:
                hits.append((attr_name, cat))
                break
    if not hits:
        raise cur.fail(f"no categorical attribute contains {value!r}")
    if len(hits) > 1:
        raise cur.fail(f"ambiguous attribute for category {value!r}: "
                       + ", ".join(sorted(a for a, _ in hits)))
    attr_name, canonical = hits[0]
    return CategoryIs(attribute=attr_name, category=canonical)


def _implicit_currency_attribute(cur: _Cursor, ctx: CommandContext) -> str:
    candidates = [a.name for a in ctx.schema
                  if a.kind is AttrKind.QUANTITATIVE and (a.unit or "").lower() in CURRENCY_UNITS]
    if len(candidates) == 1:
        return candidates[0]
    if not candidates:
        raise cur.fail("no attribute with a currency unit to bind the amount to")
    raise cur.fail("ambiguous attribute for the amount: " + ", ".join(sorted(candidates)))


def _parse_predicate(cur: _Cursor, ctx: CommandContext) -> Predicate:
    if cur.peek() in (("with",), ("where",)):
        cur.advance()

    if cur.peek() == ("in",):
        cur.advance()
        if cur.exhausted():
            raise cur.fail("expected a category after 'in'")
        value = " ".join(cur.tokens[cur.i:])
        cur.advance(len(cur.tokens) - cur.i)
        return _lookup_category(cur, ctx, value)

    # explicit attribute (names and synonyms may span several words)
    for span in (3, 2, 1):
        candidate = " ".join(cur.peek(span))
        if len(cur.peek(span)) < span:
            continue
        try:
            attr_name = resolve_attribute(candidate, ctx.schema, ctx.synonyms)
        except CommandError:
            continue
        cur.advance(span)
        op = _match_cmp(cur)
        if op is None:
            raise cur.fail(f"expected a comparator after {candidate!r}")
        if cur.exhausted():
            raise cur.fail("expected a quantity after the comparator")
        attr = next(a for a in ctx.schema if a.name == attr_name)
        if attr.kind is not AttrKind.QUANTITATIVE:
            raise cur.fail(f"attribute {attr_name!r} is not quantitative")
        qty_token = cur.tokens[cur.i]
        cur.advance()
        try:
            value = parse_quantity(qty_token)
        except CommandError as exc:
            raise CommandError(str(exc), cur.prefix())
        return Compare(attribute=attr_name, op=op, value=value)

    # comparator with the attribute omitted: a currency-marked amount binds
    # to the unique quantitative attribute carrying a currency unit
    op = _match_cmp(cur)
    if op is not None:
        if cur.exhausted():
            raise cur.fail("expected a quantity after the comparator")
        qty_token = cur.tokens[cur.i]
        cur.advance()
        if not any(sym in qty_token for sym in CURRENCY_SYMBOLS):
            raise cur.fail("cannot infer the attribute for a bare quantity; name it explicitly")
        try:
            value = parse_quantity(qty_token)
        except CommandError as exc:
            raise CommandError(str(exc), cur.prefix())
        return Compare(attribute=_implicit_currency_attribute(cur, ctx), op=op, value=value)

    raise cur.fail("expected a predicate")


def _parse_filter_body(cur: _Cursor, ctx: CommandContext) -> Predicate:
    """[noun] pred — the subject noun is parsed and discarded."""
    try:
        mark = cur.i
        return _parse_predicate(cur, ctx)
    except CommandError as first_error:
        if cur.i == mark and not cur.exhausted():
            cur.i = mark
            cur.advance()  # skip one subject noun ("countries", "cars", ...)
            try:
                return _parse_predicate(cur, ctx)
            except CommandError as second_error:
                raise second_error if cur.furthest > mark + 1 else first_error
        raise


def parse_command(text: str, ctx: CommandContext) -> CommandAst:
    """Parse one utterance into a CommandAst, or raise CommandError."""
    cur = _Cursor(_tokenize(text))
    if cur.exhausted():
        raise CommandError("empty command")

    two = cur.peek(2)
    if two == ("filter", "out"):
        cur.advance(2)
        ast: CommandAst = FilterOut(_parse_filter_body(cur, ctx))
    elif two == ("show", "only"):
        cur.advance(2)
        ast = FilterOut(Not(_parse_filter_body(cur, ctx)))
    elif two == ("show", "details"):
        cur.advance(2)
        ast = DetailsOn()
    elif two == ("hide", "details"):
        cur.advance(2)
        ast = DetailsOff()
    elif two == ("clear", "filters"):
        cur.advance(2)
        ast = ClearFilters()
    elif two == ("clear", "highlights"):
        cur.advance(2)
        ast = ClearHighlights()
    elif cur.peek() == ("reset",):
        cur.advance()
        ast = Reset()
    elif cur.peek() == ("highlight",):
        cur.advance()
        ast = Highlight(_parse_filter_body(cur, ctx))
    else:
        raise cur.fail(f"unrecognized command {cur.tokens[cur.i]!r}")

    if not cur.exhausted():
        raise cur.fail(f"unexpected trailing words: {' '.join(cur.tokens[cur.i:])!r}")
    return ast


# ---------------------------------------------------------------------------
# canonical phrasing (pretty-printer); re-parsing a canonical phrase yields
# the same AST for every grammar-expressible AST


def _format_quantity(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _phrase_predicate(pred: Predicate) -> str:
    if isinstance(pred, Compare):
        return f"with {pred.attribute} {_CANONICAL_CMP[pred.op]} {_format_quantity(pred.value)}"
    if isinstance(pred, CategoryIs):
        return f"in {pred.category}"
    raise ValueError(f"{type(pred).__name__} predicates have no canonical phrasing")


def canonical_phrase(ast: CommandAst) -> str:
    """Canonical utterance for an AST (the pretty-printing half of the
    round-trip property)."""
    if isinstance(ast, FilterOut):
        if isinstance(ast.predicate, Not):
            return "show only " + _phrase_predicate(ast.predicate.part)
        return "filter out " + _phrase_predicate(ast.predicate)
    if isinstance(ast, Highlight):
        return "highlight " + _phrase_predicate(ast.predicate)
    if isinstance(ast, ClearFilters):
        return "clear filters"
    if isinstance(ast, ClearHighlights):
        return "clear highlights"
    if isinstance(ast, Reset):
        return "reset"
    if isinstance(ast, DetailsOn):
        return "show details"
    if isinstance(ast, DetailsOff):
        return "hide details"
    raise ValueError(f"unknown AST node {ast!r}")


# ---------------------------------------------------------------------------
# predicate evaluation and validation


_OP_FUNCS = {
    CompareOp.GT: lambda a, b: a > b,
    CompareOp.GE: lambda a, b: a >= b,
    CompareOp.LT: lambda a, b: a < b,
    CompareOp.LE: lambda a, b: a <= b,
    CompareOp.EQ: lambda a, b: a == b,
}


def eval_predicate(pred: Predicate, values: Mapping[str, Any]) -> bool:
    if isinstance(pred, Compare):
        return _OP_FUNCS[pred.op](float(values[pred.attribute]), pred.value)
    if isinstance(pred, CategoryIs):
        return values[pred.attribute] == pred.category
    if isinstance(pred, And):
        return all(eval_predicate(p, values) for p in pred.parts)
    if isinstance(pred, Not):
        return not eval_predicate(pred.part, values)
    raise TypeError(f"unknown predicate {pred!r}")


def predicate_attributes(pred: Predicate) -> frozenset[str]:
    if isinstance(pred, Compare):
        return frozenset((pred.attribute,))
    if isinstance(pred, CategoryIs):
        return frozenset((pred.attribute,))
    if isinstance(pred, And):
        return frozenset().union(*(predicate_attributes(p) for p in pred.parts))
    if isinstance(pred, Not):
        return predicate_attributes(pred.part)
    raise TypeError(f"unknown predicate {pred!r}")


def validate_predicate(pred: Predicate, schema: Sequence[AttributeSchema]) -> None:
    by_name = {a.name: a for a in schema}
    if isinstance(pred, Compare):
        attr = by_name.get(pred.attribute)
        if attr is None:
            raise CommandError(f"unknown attribute {pred.attribute!r}")
        if attr.kind is not AttrKind.QUANTITATIVE:
            raise CommandError(f"attribute {pred.attribute!r} is not quantitative")
    elif isinstance(pred, CategoryIs):
        attr = by_name.get(pred.attribute)
        if attr is None:
            raise CommandError(f"unknown attribute {pred.attribute!r}")
        if attr.kind is not AttrKind.CATEGORICAL:
            raise CommandError(f"attribute {pred.attribute!r} is not categorical")
    elif isinstance(pred, And):
        for p in pred.parts:
            validate_predicate(p, schema)
    elif isinstance(pred, Not):
        validate_predicate(pred.part, schema)
    else:
        raise CommandError(f"unknown predicate {pred!r}")


# ---------------------------------------------------------------------------
# wire / snapshot serialization


def predicate_to_dict(pred: Predicate) -> dict:
    if isinstance(pred, Compare):
        return {"type": "compare", "attribute": pred.attribute, "op": pred.op.value, "value": pred.value}
    if isinstance(pred, CategoryIs):
        return {"type": "category_is", "attribute": pred.attribute, "category": pred.category}
    if isinstance(pred, And):
        return {"type": "and", "parts": [predicate_to_dict(p) for p in pred.parts]}
    if isinstance(pred, Not):
        return {"type": "not", "part": predicate_to_dict(pred.part)}
    raise TypeError(f"unknown predicate {pred!r}")


def predicate_from_dict(doc: Mapping) -> Predicate:
    kind = doc.get("type")
    if kind == "compare":
        return Compare(attribute=doc["attribute"], op=CompareOp(doc["op"]), value=float(doc["value"]))
    if kind == "category_is":
        return CategoryIs(attribute=doc["attribute"], category=doc["category"])
    if kind == "and":
        return And(parts=tuple(predicate_from_dict(p) for p in doc["parts"]))
    if kind == "not":
        return Not(part=predicate_from_dict(doc["part"]))
    raise InputError(f"unknown predicate type {kind!r}")


_AST_TAGS = {
    FilterOut: "filter_out", Highlight: "highlight", ClearFilters: "clear_filters",
    ClearHighlights: "clear_highlights", Reset: "reset", DetailsOn: "details_on",
    DetailsOff: "details_off",
}


def ast_to_dict(ast: CommandAst) -> dict:
    doc: dict = {"type": _AST_TAGS[type(ast)]}
    if isinstance(ast, (FilterOut, Highlight)):
        doc["predicate"] = predicate_to_dict(ast.predicate)
    return doc


def ast_from_dict(doc: Mapping) -> CommandAst:
    tag = doc.get("type")
    for cls, name in _AST_TAGS.items():
        if name == tag:
            if cls in (FilterOut, Highlight):
                return cls(predicate_from_dict(doc["predicate"]))
            return cls()
    raise InputError(f"unknown command type {tag!r}")
