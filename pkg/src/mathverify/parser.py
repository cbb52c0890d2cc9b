"""Semantic LaTeX tokenizer and parse-tree builder.

The tokenizer classifies characters of a single-line formula or constraint
string into part-of-math categories.  The parser turns the token stream
into a tree in which every semantic macro (a control sequence listed in
the macro table, with parameters and arguments separated by ``@``/``@@``)
becomes a MacroApp node with arity-checked children.  Control sequences
that are not in the table parse as opaque leaves; rejecting them is the
translator's job, which is what makes per-macro failure statistics
possible downstream.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import (
    ArityMismatch,
    DuplicateMacroName,
    IllegalCharacter,
    MalformedEntry,
    UnbalancedBraces,
)


class TokenCategory(Enum):
    LETTER = "letter"
    DIGIT = "digit"
    OPERATOR = "operator"
    RELATION = "relation"
    CONTROL_SEQUENCE = "control_sequence"
    GROUP_OPEN = "group_open"
    GROUP_CLOSE = "group_close"
    SUBSCRIPT = "subscript"
    SUPERSCRIPT = "superscript"
    ARG_SEPARATOR = "arg_separator"
    COMMA = "comma"
    OTHER = "other"


@dataclass(frozen=True, slots=True)
class Token:
    text: str
    category: TokenCategory
    # Offsets support splitting on the source string; two tokens with the
    # same text and category are the same token for tree comparison.
    byte_offset: int = field(compare=False, default=-1)


# Control words that act as relations or operators rather than operands.
RELATION_CONTROL_WORDS = {
    "\\ne": "ne", "\\neq": "ne",
    "\\le": "le", "\\leq": "le",
    "\\ge": "ge", "\\geq": "ge",
    "\\to": "to",
    "\\equiv": "equiv",
    "\\in": "in",
}

OPERATOR_CONTROL_WORDS = {"\\pm", "\\mp", "\\cdot", "\\times", "\\div", "\\ast"}

RELATION_CHARS = {"=": "eq", "<": "lt", ">": "gt"}
OPERATOR_CHARS = set("+-*/")
OTHER_CHARS = set("()[]|!'.:;")

_LETTERS = set(string.ascii_letters)
_DIGITS = set(string.digits)


def tokenize(text: str, *, placeholders: bool = False) -> list[Token]:
    """Tokenize one formula or constraint string.

    With ``placeholders=True`` (used for blueprint patterns) alphanumeric
    words of the form ``var`` or ``varN`` lex as a single token; otherwise
    letters always lex one character at a time, so ``xy`` stays an implicit
    product of two symbols.
    """
    tokens: list[Token] = []
    i = 0
    n = len(text)
    depth = 0
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
            continue
        start = i
        if ch == "\\":
            if i + 1 >= n:
                raise IllegalCharacter("\\", i)
            j = i + 1
            if text[j] in _LETTERS:
                while j < n and text[j] in _LETTERS:
                    j += 1
                word = text[i:j]
            else:
                j += 1
                word = text[i:j]
            i = j
            if word in RELATION_CONTROL_WORDS:
                cat = TokenCategory.RELATION
            elif word in OPERATOR_CONTROL_WORDS:
                cat = TokenCategory.OPERATOR
            else:
                cat = TokenCategory.CONTROL_SEQUENCE
            tokens.append(Token(word, cat, start))
        elif ch in _DIGITS:
            j = i
            while j < n and text[j] in _DIGITS:
                j += 1
            # One decimal point, only when flanked by digits.
            if j + 1 < n and text[j] == "." and text[j + 1] in _DIGITS:
                j += 1
                while j < n and text[j] in _DIGITS:
                    j += 1
            tokens.append(Token(text[i:j], TokenCategory.DIGIT, start))
            i = j
        elif ch in _LETTERS:
            if placeholders:
                j = i
                while j < n and text[j] in _LETTERS:
                    j += 1
                k = j
                while k < n and text[k] in _DIGITS:
                    k += 1
                word = text[i:k]
                if word == "var" or (word.startswith("var") and word[3:].isdigit()):
                    tokens.append(Token(word, TokenCategory.LETTER, start))
                    i = k
                    continue
            tokens.append(Token(ch, TokenCategory.LETTER, start))
            i += 1
        elif ch == "{":
            depth += 1
            tokens.append(Token(ch, TokenCategory.GROUP_OPEN, start))
            i += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                raise UnbalancedBraces(f"unmatched '}}' at byte offset {start}")
            tokens.append(Token(ch, TokenCategory.GROUP_CLOSE, start))
            i += 1
        elif ch == "^":
            tokens.append(Token(ch, TokenCategory.SUPERSCRIPT, start))
            i += 1
        elif ch == "_":
            tokens.append(Token(ch, TokenCategory.SUBSCRIPT, start))
            i += 1
        elif ch == "@":
            if i + 1 < n and text[i + 1] == "@":
                tokens.append(Token("@@", TokenCategory.ARG_SEPARATOR, start))
                i += 2
            else:
                tokens.append(Token("@", TokenCategory.ARG_SEPARATOR, start))
                i += 1
        elif ch == ",":
            tokens.append(Token(ch, TokenCategory.COMMA, start))
            i += 1
        elif ch in RELATION_CHARS:
            tokens.append(Token(ch, TokenCategory.RELATION, start))
            i += 1
        elif ch in OPERATOR_CHARS:
            tokens.append(Token(ch, TokenCategory.OPERATOR, start))
            i += 1
        elif ch in OTHER_CHARS:
            tokens.append(Token(ch, TokenCategory.OTHER, start))
            i += 1
        else:
            raise IllegalCharacter(ch, start)
    if depth != 0:
        raise UnbalancedBraces(f"{depth} unclosed group(s)")
    return tokens


# --- semantic macro table ---

AT_NONE = "none"
AT_SINGLE = "single"
AT_DOUBLE = "double"


@dataclass(frozen=True, slots=True)
class SemanticMacroDef:
    name: str
    num_optional_params: int
    num_params: int
    num_args: int
    at_arity: str
    meaning_id: str
    dlmf_ref: Optional[str] = None


class MacroTable:
    """Lookup table of semantic macro definitions, keyed by control sequence."""

    def __init__(self, defs: Iterable[SemanticMacroDef]):
        self._by_name: dict[str, SemanticMacroDef] = {}
        meanings: set[str] = set()
        for d in defs:
            if d.name in self._by_name:
                raise DuplicateMacroName(d.name)
            if d.meaning_id in meanings:
                raise MalformedEntry(f"duplicate meaning id {d.meaning_id!r}")
            if (d.num_args > 0) != (d.at_arity != AT_NONE):
                raise MalformedEntry(
                    f"{d.name}: argument count and @-arity must agree"
                )
            self._by_name[d.name] = d
            meanings.add(d.meaning_id)

    def get(self, name: str) -> Optional[SemanticMacroDef]:
        return self._by_name.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self._by_name)

    def __iter__(self):
        return iter(self._by_name.values())


def load_macro_table(source: str) -> MacroTable:
    """Parse the line-oriented macro table format.

    Columns (whitespace separated): name, optional-param count, param
    count, arg count, at-arity (none|single|double), meaning id, DLMF
    reference ('-' when absent).  '#' starts a comment.
    """
    defs = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (6, 7):
            raise MalformedEntry(f"line {lineno}: expected 6 or 7 columns")
        name, opt_s, par_s, arg_s, at, meaning = parts[:6]
        ref = parts[6] if len(parts) == 7 and parts[6] != "-" else None
        if not name.startswith("\\"):
            raise MalformedEntry(f"line {lineno}: macro name must start with backslash")
        if at not in (AT_NONE, AT_SINGLE, AT_DOUBLE):
            raise MalformedEntry(f"line {lineno}: bad at-arity {at!r}")
        try:
            opt, par, arg = int(opt_s), int(par_s), int(arg_s)
        except ValueError as exc:
            raise MalformedEntry(f"line {lineno}: non-integer arity") from exc
        if min(opt, par, arg) < 0:
            raise MalformedEntry(f"line {lineno}: negative arity")
        defs.append(SemanticMacroDef(name, opt, par, arg, at, meaning, ref))
    return MacroTable(defs)


def load_macro_table_file(path: Union[str, Path]) -> MacroTable:
    return load_macro_table(Path(path).read_text(encoding="utf-8"))


# --- parse tree ---

class NodeKind(Enum):
    LEAF = "leaf"
    GROUP = "group"
    MACRO_APP = "macro_app"
    SUB_SUP = "sub_sup"
    ROW = "row"


@dataclass(frozen=True, slots=True)
class ParseNode:
    kind: NodeKind
    token: Optional[Token] = None
    macro: Optional[str] = None          # meaning id
    macro_name: Optional[str] = None     # control sequence, for rendering
    at_text: str = ""
    paren: bool = False                  # group delimited by ( ) not { }
    optional_params: tuple["ParseNode", ...] = ()
    params: tuple["ParseNode", ...] = ()
    args: tuple["ParseNode", ...] = ()
    base: Optional["ParseNode"] = None
    sub: Optional["ParseNode"] = None
    sup: Optional["ParseNode"] = None
    children: tuple["ParseNode", ...] = ()


def leaf(token: Token) -> ParseNode:
    return ParseNode(NodeKind.LEAF, token=token)


def group(children: tuple[ParseNode, ...], paren: bool = False) -> ParseNode:
    return ParseNode(NodeKind.GROUP, paren=paren, children=children)


def row_or_single(items: list[ParseNode]) -> ParseNode:
    if len(items) == 1:
        return items[0]
    return ParseNode(NodeKind.ROW, children=tuple(items))


class _Parser:
    def __init__(self, tokens: list[Token], table: MacroTable):
        self.tokens = tokens
        self.table = table
        self.i = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def parse_sequence(self, *, in_group: bool) -> list[ParseNode]:
        items: list[ParseNode] = []
        while True:
            tok = self.peek()
            if tok is None:
                if in_group:
                    raise UnbalancedBraces("group not closed before end of input")
                break
            if tok.category is TokenCategory.GROUP_CLOSE:
                if not in_group:
                    raise UnbalancedBraces(f"unmatched '}}' at offset {tok.byte_offset}")
                break
            if tok.category in (TokenCategory.SUBSCRIPT, TokenCategory.SUPERSCRIPT):
                self.i += 1
                script = self.parse_item()
                base = items.pop() if items else None
                items.append(self._attach_script(base, tok.category, script))
                continue
            items.append(self.parse_item())
        return items

    @staticmethod
    def _attach_script(base: Optional[ParseNode], cat: TokenCategory,
                       script: ParseNode) -> ParseNode:
        if base is not None and base.kind is NodeKind.SUB_SUP:
            if cat is TokenCategory.SUBSCRIPT and base.sub is None:
                return ParseNode(NodeKind.SUB_SUP, base=base.base, sub=script, sup=base.sup)
            if cat is TokenCategory.SUPERSCRIPT and base.sup is None:
                return ParseNode(NodeKind.SUB_SUP, base=base.base, sub=base.sub, sup=script)
        if cat is TokenCategory.SUBSCRIPT:
            return ParseNode(NodeKind.SUB_SUP, base=base, sub=script)
        return ParseNode(NodeKind.SUB_SUP, base=base, sup=script)

    def parse_item(self) -> ParseNode:
        tok = self.peek()
        if tok is None:
            raise ArityMismatch("expected an item, found end of input")
        if tok.category is TokenCategory.GROUP_OPEN:
            self.i += 1
            inner = self.parse_sequence(in_group=True)
            close = self.peek()
            if close is None or close.category is not TokenCategory.GROUP_CLOSE:
                raise UnbalancedBraces("group not closed")
            self.i += 1
            return group(tuple(inner))
        if tok.category is TokenCategory.OTHER and tok.text == "(":
            self.i += 1
            inner: list[ParseNode] = []
            while True:
                nxt = self.peek()
                if nxt is None:
                    raise UnbalancedBraces("'(' never closed")
                if nxt.category is TokenCategory.OTHER and nxt.text == ")":
                    self.i += 1
                    break
                if nxt.category in (TokenCategory.SUBSCRIPT, TokenCategory.SUPERSCRIPT):
                    self.i += 1
                    script = self.parse_item()
                    base = inner.pop() if inner else None
                    inner.append(self._attach_script(base, nxt.category, script))
                    continue
                if nxt.category is TokenCategory.GROUP_CLOSE:
                    raise UnbalancedBraces("'}' inside unclosed '('")
                inner.append(self.parse_item())
            return group(tuple(inner), paren=True)
        if tok.category is TokenCategory.CONTROL_SEQUENCE:
            macro = self.table.get(tok.text)
            if macro is not None:
                self.i += 1
                return self.parse_macro_app(macro)
            self.i += 1
            return leaf(tok)
        self.i += 1
        return leaf(tok)

    def parse_macro_app(self, macro: SemanticMacroDef) -> ParseNode:
        optional: list[ParseNode] = []
        for _ in range(macro.num_optional_params):
            tok = self.peek()
            if tok is None or tok.text != "[":
                break
            self.i += 1
            inner: list[ParseNode] = []
            while True:
                tok = self.peek()
                if tok is None:
                    raise UnbalancedBraces(f"unclosed '[' in {macro.name}")
                if tok.text == "]":
                    self.i += 1
                    break
                inner.append(self.parse_item())
            optional.append(group(tuple(inner)))
        params = []
        for k in range(macro.num_params):
            if self.peek() is None or self.peek().category is TokenCategory.ARG_SEPARATOR:
                raise ArityMismatch(
                    f"{macro.name} expects {macro.num_params} parameter(s), got {k}"
                )
            params.append(self.parse_item())
        at_text = ""
        args = []
        if macro.num_args > 0:
            tok = self.peek()
            if tok is None or tok.category is not TokenCategory.ARG_SEPARATOR:
                raise ArityMismatch(f"{macro.name} expects '@' before its argument(s)")
            at_text = tok.text
            self.i += 1
            for k in range(macro.num_args):
                if self.peek() is None:
                    raise ArityMismatch(
                        f"{macro.name} expects {macro.num_args} argument(s), got {k}"
                    )
                args.append(self.parse_item())
        return ParseNode(
            NodeKind.MACRO_APP,
            macro=macro.meaning_id,
            macro_name=macro.name,
            at_text=at_text or ("@" if macro.at_arity == AT_SINGLE else
                                "@@" if macro.at_arity == AT_DOUBLE else ""),
            optional_params=tuple(optional),
            params=tuple(params),
            args=tuple(args),
        )


def parse(tokens: list[Token], table: MacroTable) -> ParseNode:
    """Build a parse tree; unknown control sequences stay opaque leaves."""
    p = _Parser(tokens, table)
    items = p.parse_sequence(in_group=False)
    return row_or_single(items) if items else ParseNode(NodeKind.ROW)


def parse_text(text: str, table: MacroTable, *, placeholders: bool = False) -> ParseNode:
    return parse(tokenize(text, placeholders=placeholders), table)


# --- flattening and rendering ---

def _synth(text: str, category: TokenCategory) -> Token:
    return Token(text, category, -1)


def flatten_tokens(node: ParseNode) -> list[Token]:
    """Re-emit the token stream of a parse tree (group braces included)."""
    out: list[Token] = []
    _flatten(node, out)
    return out


def _flatten(node: ParseNode, out: list[Token]) -> None:
    if node.kind is NodeKind.LEAF:
        if node.token is not None:
            out.append(node.token)
    elif node.kind is NodeKind.ROW:
        for c in node.children:
            _flatten(c, out)
    elif node.kind is NodeKind.GROUP:
        if node.paren:
            out.append(_synth("(", TokenCategory.OTHER))
            for c in node.children:
                _flatten(c, out)
            out.append(_synth(")", TokenCategory.OTHER))
        else:
            out.append(_synth("{", TokenCategory.GROUP_OPEN))
            for c in node.children:
                _flatten(c, out)
            out.append(_synth("}", TokenCategory.GROUP_CLOSE))
    elif node.kind is NodeKind.SUB_SUP:
        if node.base is not None:
            _flatten(node.base, out)
        if node.sub is not None:
            out.append(_synth("_", TokenCategory.SUBSCRIPT))
            _flatten(node.sub, out)
        if node.sup is not None:
            out.append(_synth("^", TokenCategory.SUPERSCRIPT))
            _flatten(node.sup, out)
    elif node.kind is NodeKind.MACRO_APP:
        out.append(_synth(node.macro_name or "", TokenCategory.CONTROL_SEQUENCE))
        for p in node.optional_params:
            out.append(_synth("[", TokenCategory.OTHER))
            for c in p.children:
                _flatten(c, out)
            out.append(_synth("]", TokenCategory.OTHER))
        for p in node.params:
            _flatten_braced(p, out)
        if node.args:
            out.append(_synth(node.at_text or "@", TokenCategory.ARG_SEPARATOR))
            for a in node.args:
                _flatten_braced(a, out)


def _flatten_braced(node: ParseNode, out: list[Token]) -> None:
    # Parameters and arguments always render braced for round-trip stability.
    if node.kind is NodeKind.GROUP and not node.paren:
        _flatten(node, out)
    else:
        out.append(_synth("{", TokenCategory.GROUP_OPEN))
        _flatten(node, out)
        out.append(_synth("}", TokenCategory.GROUP_CLOSE))


def render(node: ParseNode) -> str:
    """Render a parse tree back to semantic LaTeX."""
    parts: list[str] = []
    for tok in flatten_tokens(node):
        if parts and _needs_space(parts[-1], tok.text):
            parts.append(" ")
        parts.append(tok.text)
    return "".join(parts)


def _needs_space(prev: str, nxt: str) -> bool:
    # A control word swallows following letters; separate them.
    return (
        len(prev) > 1
        and prev.startswith("\\")
        and prev[1] in _LETTERS
        and bool(nxt)
        and nxt[0] in _LETTERS
    )
