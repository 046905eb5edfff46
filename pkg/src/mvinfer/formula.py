"""Parser for the model formula mini-language.

Grammar::

    formula  = response "~" term (("+" | "*") term)*
    term     = factor | factor ":" factor (":" factor)*
    response = name                      (long formats)
             | "cbind(" name ("," name)* ")"   (wide format)

Whitespace is insignificant.  ``*`` between terms expands to all main effects
and interactions of its operands, ``:`` denotes a single interaction term and
``+`` separates additive terms.  The pattern ``A + A:B`` where ``B`` never
appears on its own declares ``B`` as nested under ``A``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import DesignError

_NAME = re.compile(r"[A-Za-z0-9_.\-]+")


@dataclass
class ParsedFormula:
    """Structural content of a formula, before any data is seen."""

    raw: str
    mode: str  # "rm" | "manova-long" | "manova-wide"
    response: str | None  # single response column (long formats)
    responses: list[str] | None  # cbind components (wide format)
    factors: list[str]  # factor names in order of first appearance
    effects: list[str]  # effect names in reporting order
    structure: str  # "crossed" | "nested"
    nested_chain: list[str] = field(default_factory=list)  # outermost first


def _tokenize(text: str) -> list[str]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+*:~(),":
            tokens.append(ch)
            i += 1
            continue
        m = _NAME.match(text, i)
        if not m:
            raise DesignError(f"unexpected character {ch!r} in formula")
        tokens.append(m.group(0))
        i = m.end()
    return tokens


def _parse_response(tokens: list[str], mode: str) -> tuple[str | None, list[str] | None, int]:
    """Returns (response, responses, index of first token after the response)."""
    if not tokens or tokens[0] in "+*:~(),":
        raise DesignError("formula has an empty response (left of '~')")
    if tokens[0] == "cbind":
        if mode != "manova-wide":
            raise DesignError("cbind(...) responses are only valid in wide format")
        if len(tokens) < 4 or tokens[1] != "(":
            raise DesignError("malformed cbind(...) response")
        names: list[str] = []
        i = 2
        expect_name = True
        while i < len(tokens):
            tok = tokens[i]
            if expect_name:
                if tok in "+*:~(),":
                    raise DesignError("malformed cbind(...) response")
                names.append(tok)
                expect_name = False
            elif tok == ",":
                expect_name = True
            elif tok == ")":
                i += 1
                break
            else:
                raise DesignError("malformed cbind(...) response")
            i += 1
        else:
            raise DesignError("unterminated cbind(...) response")
        if not names:
            raise DesignError("cbind(...) lists no response columns")
        if len(set(names)) != len(names):
            raise DesignError("cbind(...) lists a response column twice")
        return None, names, i
    if mode == "manova-wide":
        raise DesignError("wide format requires a cbind(...) response")
    return tokens[0], None, 1


def _parse_terms(tokens: list[str]) -> list[tuple[str, tuple[str, ...]]]:
    """Parse the right-hand side into (operator, term) pairs.

    Each term is a tuple of factor names (':'-joined interaction).  The
    operator is the separator preceding the term ('+' for the first one).
    """
    out: list[tuple[str, tuple[str, ...]]] = []
    op = "+"
    i = 0
    current: list[str] = []
    expect_factor = True
    while i < len(tokens):
        tok = tokens[i]
        if expect_factor:
            if tok in "+*:~(),":
                raise DesignError(f"expected a factor name, found {tok!r}")
            current.append(tok)
            expect_factor = False
        elif tok == ":":
            expect_factor = True
        elif tok in "+*":
            out.append((op, tuple(current)))
            current = []
            op = tok
            expect_factor = True
        else:
            raise DesignError(f"unknown operator {tok!r} in formula")
        i += 1
    if expect_factor or not current:
        raise DesignError("formula ends with a dangling operator")
    out.append((op, tuple(current)))
    return out


def _counter_expand(operands: list[tuple[str, ...]]) -> list[tuple[str, ...]]:
    """All nonempty operand combinations of a '*' chain, in binary-counter order.

    With operands (A, B, C) the order is A, B, A:B, C, A:C, B:C, A:B:C — the
    order factorial outputs are conventionally listed in.
    """
    k = len(operands)
    combos: list[tuple[str, ...]] = []
    for s in range(1, 2**k):
        members: list[str] = []
        for bit in range(k):
            if s >> bit & 1:
                members.extend(operands[bit])
        combos.append(tuple(dict.fromkeys(members)))
    return combos


def _expand_effects(pairs: list[tuple[str, tuple[str, ...]]]) -> list[tuple[str, ...]]:
    """Expand '*' chains; '+' keeps terms as written.  Duplicates keep first spot."""
    effects: list[tuple[str, ...]] = []
    chain: list[tuple[str, ...]] = []

    def flush() -> None:
        nonlocal chain
        if not chain:
            return
        expanded = chain if len(chain) == 1 else _counter_expand(chain)
        for eff in expanded:
            if eff not in effects:
                effects.append(eff)
        chain = []

    for op, term in pairs:
        if op == "*":
            chain.append(term)
        else:
            flush()
            chain = [term]
    flush()
    return effects


def full_lattice(factors: list[str]) -> list[str]:
    """Every main effect and interaction of the given factors, counter order."""
    return [":".join(eff) for eff in _counter_expand([(f,) for f in factors])]


def parse_formula(formula: str, mode: str) -> ParsedFormula:
    """Parse a formula for the given analysis mode.

    mode is one of "rm", "manova-long", "manova-wide".
    """
    if mode not in ("rm", "manova-long", "manova-wide"):
        raise DesignError(f"unknown analysis mode {mode!r}")
    if formula.count("~") != 1:
        raise DesignError("formula must contain exactly one '~'")
    tokens = _tokenize(formula)
    try:
        tilde = tokens.index("~")
    except ValueError:
        raise DesignError("formula must contain exactly one '~'") from None

    response, responses, consumed = _parse_response(tokens[:tilde] + ["~"], mode)
    if consumed != tilde:
        raise DesignError("unexpected tokens between the response and '~'")

    pairs = _parse_terms(tokens[tilde + 1 :])
    effects = _expand_effects(pairs)

    factors: list[str] = []
    for eff in effects:
        for f in eff:
            if f not in factors:
                factors.append(f)

    main = {eff[0] for eff in effects if len(eff) == 1}
    hidden = [f for f in factors if f not in main]

    if hidden:
        structure = "nested"
        chain = _validate_nested(effects, factors, main)
    else:
        structure = "crossed"
        chain = []

    if mode == "rm":
        if structure == "nested":
            raise DesignError(
                "nested factor structures are not supported in repeated-measures mode"
            )
        # Repeated-measures reports always cover the full effect lattice.
        effect_names = full_lattice(factors)
    else:
        effect_names = [":".join(eff) for eff in effects]

    return ParsedFormula(
        raw=formula.strip(),
        mode=mode,
        response=response,
        responses=responses,
        factors=factors,
        effects=effect_names,
        structure=structure,
        nested_chain=chain,
    )


def _validate_nested(effects, factors, main) -> list[str]:
    """Accept exactly A + A:B or A + A:B + A:B:C; anything else is mixed."""
    mixed = DesignError(
        "designs involving both crossed and nested factors are not supported"
    )
    if len(main) != 1:
        raise mixed
    chain = [next(iter(main))]
    expected: list[tuple[str, ...]] = [(chain[0],)]
    for f in factors:
        if f not in main:
            chain.append(f)
            expected.append(tuple(chain))
    if len(chain) > 3:
        raise DesignError("nested designs support at most three factors")
    if effects != expected:
        raise mixed
    return chain
