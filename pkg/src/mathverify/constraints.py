"""Constraint interpretation: blueprints, set notation, and domains.

Formula constraints arrive as semantic LaTeX strings.  Three interpreters
run over each one: blueprint matching (token-for-token comparison against
pattern rules with ``var``/``varN`` placeholders, yielding hand-picked
test values), set-notation reading (``n=0,1,2,\\dots`` and ``a,b\\in A``
shapes, yielding variable domains), and compound-inequality splitting
(yielding interval domains).  Constraints that none of the interpreters
understand are reported as blueprint gaps instead of aborting the
verification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import (
    ConstraintError,
    InconsistentProgression,
    MalformedRule,
    MathVerifyError,
    PlaceholderValueCountMismatch,
    UnknownSetSymbol,
)
from .parser import (
    MacroTable,
    ParseNode,
    Token,
    TokenCategory,
    flatten_tokens,
    parse,
    tokenize,
)
from .translate import GREEK_LETTERS

_EMPTY_TABLE = MacroTable(())

SET_SYMBOLS = {
    "\\Real": "real",
    "\\Complex": "complex",
    "\\Integer": "integer",
    "\\Rational": "rational",
    "\\NatNumber": "natural",
}

BASE_INTEGER = "integer"
BASE_RATIONAL = "rational"
BASE_REAL = "real"
BASE_COMPLEX = "complex"

_DOTS = {"\\dots", "\\ldots", "\\cdots"}

_INEQUALITY_TEXTS = {"<", ">", "\\le", "\\leq", "\\ge", "\\geq", "\\ne", "\\neq"}

_FLIP = {"<": ">", ">": "<", "\\le": "\\ge", "\\ge": "\\le",
         "\\leq": "\\geq", "\\geq": "\\leq", "\\ne": "\\ne", "\\neq": "\\neq"}


@dataclass(frozen=True, slots=True)
class VariableDomain:
    var: str
    base_set: str = BASE_REAL
    # (lower, lower_strict, upper, upper_strict); None bound = unbounded.
    interval: Optional[tuple[Optional[Fraction], bool, Optional[Fraction], bool]] = None
    # (start, step, end); end None = unbounded progression.
    progression: Optional[tuple[Fraction, Fraction, Optional[Fraction]]] = None
    finite_set: Optional[tuple[Fraction, ...]] = None
    exclusions: tuple[Fraction, ...] = ()

    def __post_init__(self):
        populated = sum(
            x is not None for x in (self.interval, self.progression, self.finite_set)
        )
        if populated > 1:
            raise MathVerifyError("domain may carry at most one shape")
        if self.progression is not None and self.progression[1] == 0:
            raise MathVerifyError("progression step must be nonzero")


@dataclass(frozen=True, slots=True)
class SpecialValueAssignment:
    assignments: dict[str, Fraction]
    source_blueprint: str


@dataclass(frozen=True, slots=True)
class ConstraintBlueprint:
    pattern: ParseNode
    pattern_tokens: tuple[Token, ...]
    placeholders: tuple[str, ...]
    values: tuple[Fraction, ...]
    source: str

    def __post_init__(self):
        if not self.placeholders:
            raise MalformedRule(f"no placeholder in blueprint {self.source!r}")
        if len(self.placeholders) != len(self.values):
            raise PlaceholderValueCountMismatch(
                f"{self.source!r}: {len(self.placeholders)} placeholder(s), "
                f"{len(self.values)} value(s)"
            )


def _is_placeholder(token: Token) -> bool:
    return (
        token.category is TokenCategory.LETTER
        and token.text.startswith("var")
        and (token.text == "var" or token.text[3:].isdigit())
    )


def _variable_token_name(token: Token) -> Optional[str]:
    """Variable name when the token may stand in for a placeholder:
    Latin letters, Greek letters, and alphanumeric word tokens."""
    if token.category is TokenCategory.LETTER:
        return token.text
    if token.category is TokenCategory.CONTROL_SEQUENCE:
        name = token.text[1:]
        if name in GREEK_LETTERS:
            return name
    return None


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedRule(f"not a rational number: {text!r}") from exc


def parse_blueprint_rules(
    rule_text: str, table: Optional[MacroTable] = None
) -> list[ConstraintBlueprint]:
    """Parse ``pattern ==> values`` rules, one per line, '#' comments allowed."""
    table = table or _EMPTY_TABLE
    blueprints = []
    for lineno, raw in enumerate(rule_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.count("==>") != 1:
            raise MalformedRule(f"line {lineno}: expected exactly one '==>'")
        left, right = (s.strip() for s in line.split("==>"))
        try:
            tokens = tokenize(left, placeholders=True)
            tree = parse(tokens, table)
        except MathVerifyError as exc:
            raise MalformedRule(f"line {lineno}: {exc}") from exc
        flat = tuple(flatten_tokens(tree))
        placeholders: list[str] = []
        for t in flat:
            if _is_placeholder(t) and t.text not in placeholders:
                placeholders.append(t.text)
        values = tuple(parse_rational(v.strip()) for v in right.split(","))
        blueprints.append(
            ConstraintBlueprint(tree, flat, tuple(placeholders), values, line)
        )
    return blueprints


def load_blueprints_file(
    path: Union[str, Path], table: Optional[MacroTable] = None
) -> list[ConstraintBlueprint]:
    return parse_blueprint_rules(Path(path).read_text(encoding="utf-8"), table)


def match_constraint(
    constraint: ParseNode, blueprints: Sequence[ConstraintBlueprint]
) -> Optional[SpecialValueAssignment]:
    """First blueprint (rule-file order) whose token count, ordering, and
    categories all match; placeholders bind variable-like tokens, every
    other token must match exactly."""
    ctokens = flatten_tokens(constraint)
    for bp in blueprints:
        if len(bp.pattern_tokens) != len(ctokens):
            continue
        binding: dict[str, str] = {}
        ok = True
        for p, c in zip(bp.pattern_tokens, ctokens):
            if _is_placeholder(p):
                name = _variable_token_name(c)
                if name is None:
                    ok = False
                    break
                if p.text in binding and binding[p.text] != name:
                    ok = False
                    break
                binding[p.text] = name
            else:
                if p.category is not c.category or p.text != c.text:
                    ok = False
                    break
        if not ok:
            continue
        assignments = {
            binding[ph]: value for ph, value in zip(bp.placeholders, bp.values)
        }
        return SpecialValueAssignment(assignments, bp.source)
    return None


# --- set notation ---

def _split_on(tokens: Sequence[Token], text: str) -> Optional[tuple[list[Token], list[Token]]]:
    for i, t in enumerate(tokens):
        if t.text == text:
            return list(tokens[:i]), list(tokens[i + 1:])
    return None


def _split_commas(tokens: Sequence[Token]) -> list[list[Token]]:
    chunks: list[list[Token]] = [[]]
    for t in tokens:
        if t.category is TokenCategory.COMMA:
            chunks.append([])
        else:
            chunks[-1].append(t)
    return chunks


def _parse_var_list(tokens: Sequence[Token]) -> list[tuple[Fraction, str]]:
    """Left side of a set constraint: comma-separated variables, each with
    an optional rational coefficient (``2\\nu`` constrains nu via 2*nu)."""
    out = []
    for chunk in _split_commas(tokens):
        if not chunk:
            raise ConstraintError("empty variable in list")
        coefficient = Fraction(1)
        rest = chunk
        if len(chunk) >= 2 and chunk[0].category is TokenCategory.DIGIT:
            coefficient = parse_rational(chunk[0].text)
            rest = chunk[1:]
        if len(rest) != 1:
            raise ConstraintError("variable list entry is not a simple symbol")
        name = _variable_token_name(rest[0])
        if name is None:
            raise ConstraintError(f"not a variable token: {rest[0].text!r}")
        if coefficient == 0:
            raise ConstraintError("zero coefficient on a constrained variable")
        out.append((coefficient, name))
    return out


def _parse_value_element(tokens: Sequence[Token]) -> Union[Fraction, str, None]:
    """A value-list element: a signed rational, a dots marker, or a
    symbolic endpoint name.  Anything else raises."""
    if not tokens:
        raise ConstraintError("empty element in value list")
    if len(tokens) == 1 and tokens[0].text in _DOTS:
        return None  # dots marker
    sign = Fraction(1)
    rest = list(tokens)
    if rest[0].text == "-" and rest[0].category is TokenCategory.OPERATOR:
        sign = Fraction(-1)
        rest = rest[1:]
    elif rest[0].text == "+" and rest[0].category is TokenCategory.OPERATOR:
        rest = rest[1:]
    if len(rest) == 1 and rest[0].category is TokenCategory.DIGIT:
        return sign * parse_rational(rest[0].text)
    if len(rest) == 3 and rest[0].category is TokenCategory.DIGIT and \
            rest[1].text == "/" and rest[2].category is TokenCategory.DIGIT:
        return sign * (parse_rational(rest[0].text) / parse_rational(rest[2].text))
    if sign == 1 and len(rest) == 1:
        name = _variable_token_name(rest[0])
        if name is not None:
            return name  # symbolic endpoint such as N
    raise ConstraintError(
        "value-list element is not a signed rational: "
        + " ".join(t.text for t in tokens)
    )


def _value_list_domain(
    tokens: Sequence[Token],
) -> tuple[Optional[tuple[Fraction, Fraction, Optional[Fraction]]], Optional[tuple[Fraction, ...]]]:
    """Interpret ``0,1,2,\\dots`` style lists: (progression, finite_set)."""
    chunks = _split_commas(tokens)
    elements = [_parse_value_element(c) for c in chunks]
    if not elements:
        raise ConstraintError("empty value list")
    dots_positions = [i for i, e in enumerate(elements) if e is None]
    if not dots_positions:
        if not all(isinstance(e, Fraction) for e in elements):
            raise ConstraintError("finite value list with a non-numeric member")
        return None, tuple(elements)  # type: ignore[arg-type]
    if len(dots_positions) > 1:
        raise ConstraintError("more than one dots marker")
    di = dots_positions[0]
    head = elements[:di]
    tail = elements[di + 1:]
    if len(head) < 2:
        raise InconsistentProgression(
            "progression needs at least two explicit terms before the dots"
        )
    if not all(isinstance(e, Fraction) for e in head):
        raise ConstraintError("non-numeric term before the dots")
    head_f = [e for e in head]  # type: list[Fraction]
    step = head_f[1] - head_f[0]
    if step == 0:
        raise InconsistentProgression("zero step")
    for i, term in enumerate(head_f):
        if term != head_f[0] + i * step:
            raise InconsistentProgression(
                f"terms {head_f} are not an arithmetic progression"
            )
    end: Optional[Fraction] = None
    if tail:
        if len(tail) != 1:
            raise ConstraintError("unexpected members after the dots")
        if isinstance(tail[0], Fraction):
            end = tail[0]
        # A symbolic endpoint (e.g. N) stays open-ended.
    return (head_f[0], step, end), None


def interpret_set_notation(constraint: ParseNode) -> list[VariableDomain]:
    """Interpret ``vars = value-list`` and ``vars \\in set`` constraints.

    Every listed variable receives the same domain; an optional integer
    coefficient on the left rescales the listed values.
    """
    tokens = flatten_tokens(constraint)
    in_split = _split_on(tokens, "\\in")
    if in_split is not None:
        lhs, rhs = in_split
        variables = _parse_var_list(lhs)
        if len(rhs) != 1:
            raise ConstraintError("set expression is not a single symbol")
        sym = rhs[0].text
        if sym not in SET_SYMBOLS:
            raise UnknownSetSymbol(sym)
        base = SET_SYMBOLS[sym]
        out = []
        for coefficient, name in variables:
            if coefficient != 1:
                raise ConstraintError("coefficient on a set-membership variable")
            if base == "natural":
                out.append(VariableDomain(
                    name, BASE_INTEGER,
                    interval=(Fraction(0), False, None, False),
                ))
            else:
                out.append(VariableDomain(name, base))
        return out
    eq_split = _split_on(tokens, "=")
    if eq_split is not None:
        lhs, rhs = eq_split
        variables = _parse_var_list(lhs)
        progression, finite = _value_list_domain(rhs)
        out = []
        for coefficient, name in variables:
            if progression is not None:
                start, step, end = progression
                scaled = (start / coefficient, step / coefficient,
                          None if end is None else end / coefficient)
                values_integral = all(
                    v.denominator == 1 for v in (scaled[0], scaled[1])
                )
                out.append(VariableDomain(
                    name,
                    BASE_INTEGER if values_integral else BASE_RATIONAL,
                    progression=scaled,
                ))
            else:
                scaled_set = tuple(v / coefficient for v in finite)
                values_integral = all(v.denominator == 1 for v in scaled_set)
                out.append(VariableDomain(
                    name,
                    BASE_INTEGER if values_integral else BASE_RATIONAL,
                    finite_set=scaled_set,
                ))
        return out
    raise ConstraintError("not a set-notation constraint")


# --- compound inequalities ---

def split_compound_inequality(constraint: ParseNode) -> list[str]:
    """``0 < x < 1`` becomes the atomic constraints ``x > 0`` and
    ``x < 1``; an n-relation chain yields n adjacent-pair atoms."""
    tokens = flatten_tokens(constraint)
    rel_idx = [
        i for i, t in enumerate(tokens)
        if t.text in _INEQUALITY_TEXTS and t.category in
        (TokenCategory.RELATION, TokenCategory.OPERATOR)
    ]
    if not rel_idx:
        raise ConstraintError("no inequality relation in constraint")
    segments: list[list[Token]] = []
    prev = 0
    for i in rel_idx:
        segments.append(list(tokens[prev:i]))
        prev = i + 1
    segments.append(list(tokens[prev:]))
    if any(not s for s in segments):
        raise ConstraintError("inequality with a missing side")
    atoms = []
    for k, i in enumerate(rel_idx):
        left, right = segments[k], segments[k + 1]
        rel = tokens[i].text
        if _is_literal_number(left) and not _is_literal_number(right):
            left, right = right, left
            rel = _FLIP[rel]
        atoms.append(f"{_tokens_text(left)} {rel} {_tokens_text(right)}")
    return atoms


def _is_literal_number(tokens: Sequence[Token]) -> bool:
    body = list(tokens)
    if body and body[0].text in ("+", "-"):
        body = body[1:]
    return len(body) == 1 and body[0].category is TokenCategory.DIGIT


def _tokens_text(tokens: Sequence[Token]) -> str:
    parts: list[str] = []
    for t in tokens:
        if parts and parts[-1].startswith("\\") and parts[-1][1:].isalpha() and \
                t.text and (t.text[0].isalpha()):
            parts.append(" ")
        parts.append(t.text)
    return "".join(parts)


def _literal_value(tokens: Sequence[Token]) -> Optional[Fraction]:
    body = list(tokens)
    sign = Fraction(1)
    if body and body[0].text == "-":
        sign = Fraction(-1)
        body = body[1:]
    elif body and body[0].text == "+":
        body = body[1:]
    if len(body) == 1 and body[0].category is TokenCategory.DIGIT:
        return sign * parse_rational(body[0].text)
    if len(body) == 3 and body[0].category is TokenCategory.DIGIT and \
            body[1].text == "/" and body[2].category is TokenCategory.DIGIT:
        return sign * (parse_rational(body[0].text) / parse_rational(body[2].text))
    return None


def domain_from_atomic(atomic: str) -> Optional[VariableDomain]:
    """Interval or exclusion domain from one atomic inequality, when one
    side is a bare variable and the other a rational literal."""
    try:
        tokens = tokenize(atomic)
    except MathVerifyError:
        return None
    rel_idx = [i for i, t in enumerate(tokens) if t.text in _INEQUALITY_TEXTS]
    if len(rel_idx) != 1:
        return None
    i = rel_idx[0]
    left, right = tokens[:i], tokens[i + 1:]
    rel = tokens[i].text
    var = _variable_token_name(left[0]) if len(left) == 1 else None
    value = _literal_value(right)
    if var is None or value is None:
        if len(right) == 1 and _variable_token_name(right[0]) and \
                (v := _literal_value(left)) is not None:
            var = _variable_token_name(right[0])
            value = v
            rel = _FLIP[rel]
        else:
            return None
    if rel in ("\\ne", "\\neq"):
        return VariableDomain(var, BASE_COMPLEX, exclusions=(value,))
    if rel == "<":
        return VariableDomain(var, BASE_REAL, interval=(None, False, value, True))
    if rel in ("\\le", "\\leq"):
        return VariableDomain(var, BASE_REAL, interval=(None, False, value, False))
    if rel == ">":
        return VariableDomain(var, BASE_REAL, interval=(value, True, None, False))
    if rel in ("\\ge", "\\geq"):
        return VariableDomain(var, BASE_REAL, interval=(value, False, None, False))
    return None


# --- domain checking ---

def _accepts(domain: VariableDomain, value) -> bool:
    if isinstance(value, complex):
        if value.imag != 0:
            return domain.base_set == BASE_COMPLEX and not domain.exclusions
        value = Fraction(value.real)
    value = Fraction(value)
    if value in domain.exclusions:
        return False
    if domain.base_set == BASE_INTEGER and value.denominator != 1:
        return False
    if domain.interval is not None:
        lower, lstrict, upper, ustrict = domain.interval
        if lower is not None and (value < lower or (lstrict and value == lower)):
            return False
        if upper is not None and (value > upper or (ustrict and value == upper)):
            return False
    if domain.progression is not None:
        start, step, end = domain.progression
        k = (value - start) / step
        if k.denominator != 1 or k < 0:
            return False
        if end is not None:
            if step > 0 and value > end:
                return False
            if step < 0 and value < end:
                return False
    if domain.finite_set is not None and value not in domain.finite_set:
        return False
    return True


def check_domain(domains: Sequence[VariableDomain], assignment: dict) -> bool:
    """True iff every assigned variable satisfies every domain naming it;
    variables without domains are unconstrained."""
    for name, value in assignment.items():
        for d in domains:
            if d.var == name and not _accepts(d, value):
                return False
    return True


# --- pipeline driver ---

@dataclass
class ConstraintInterpretation:
    domains: list[VariableDomain] = field(default_factory=list)
    specials: Optional[SpecialValueAssignment] = None
    unmatched: list[str] = field(default_factory=list)
    conflicts: list[str] = field(default_factory=list)


def interpret_constraints(
    constraint_strings: Sequence[str],
    blueprints: Sequence[ConstraintBlueprint],
    table: Optional[MacroTable] = None,
) -> ConstraintInterpretation:
    """Run every interpreter over each constraint string and pool results.

    A constraint is handled when a blueprint matches, set notation reads
    cleanly, or at least one atomic inequality yields a domain; the rest
    land in the blueprint-gap list.
    """
    table = table or _EMPTY_TABLE
    result = ConstraintInterpretation()
    special_values: dict[str, Fraction] = {}
    sources: list[str] = []
    for text in constraint_strings:
        handled = False
        try:
            tree = parse(tokenize(text), table)
        except MathVerifyError:
            result.unmatched.append(text)
            continue
        matched = match_constraint(tree, blueprints)
        if matched is not None:
            special_values.update(matched.assignments)
            sources.append(matched.source_blueprint)
            handled = True
        try:
            result.domains.extend(interpret_set_notation(tree))
            handled = True
        except ConstraintError:
            pass
        try:
            atoms = split_compound_inequality(tree)
        except ConstraintError:
            atoms = []
        for atom in atoms:
            domain = domain_from_atomic(atom)
            if domain is not None:
                result.domains.append(domain)
                handled = True
        if not handled:
            result.unmatched.append(text)
    if special_values:
        # A blueprint value that its own domains reject is logged, and the
        # blueprint value wins.
        for name, value in special_values.items():
            named = [d for d in result.domains if d.var == name]
            if named and not check_domain(named, {name: value}):
                result.conflicts.append(
                    f"{name}={value} conflicts with interpreted domain"
                )
        result.specials = SpecialValueAssignment(special_values, ";".join(sources))
    return result
