"""Propositional formulas over the constants true/false: token alphabet,
recursive-descent evaluator, and an exact-length random generator.

Grammar: F := T | F | "not" F | "(" F op F ")" with op in {or, and, implies,
iff}.  Token costs are 1 for a leaf, 1 + |F| for a negation, and
3 + |F1| + |F2| for a parenthesized binary application, so every length >= 1
is reachable (negation chains cover 2-4, binaries need >= 5).
"""

from __future__ import annotations

import enum

from .errors import ConfigError


class LogicToken(enum.IntEnum):
    TRUE = 0
    FALSE = 1
    NOT = 2
    OR = 3
    AND = 4
    IMPLIES = 5
    IFF = 6
    LPAREN = 7
    RPAREN = 8


ALPHABET_SIZE = len(LogicToken)

_SYMBOLS = {
    LogicToken.TRUE: "T",
    LogicToken.FALSE: "F",
    LogicToken.NOT: "~",
    LogicToken.OR: "|",
    LogicToken.AND: "&",
    LogicToken.IMPLIES: ">",
    LogicToken.IFF: "=",
    LogicToken.LPAREN: "(",
    LogicToken.RPAREN: ")",
}

_BINARY_OPS = (LogicToken.OR, LogicToken.AND, LogicToken.IMPLIES, LogicToken.IFF)


def format_tokens(tokens):
    return "".join(_SYMBOLS[LogicToken(t)] for t in tokens)


class FormulaError(ConfigError):
    """Malformed token sequence; ``position`` is the offending token index."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


def _apply(op, a, b):
    if op is LogicToken.OR:
        return a or b
    if op is LogicToken.AND:
        return a and b
    if op is LogicToken.IMPLIES:
        return (not a) or b
    return a == b  # IFF


def evaluate_formula(tokens) -> bool:
    """Evaluate a complete token sequence; raises FormulaError when malformed."""
    tokens = [LogicToken(t) for t in tokens]

    def parse(pos):
        if pos >= len(tokens):
            raise FormulaError("unexpected end of formula", pos)
        tok = tokens[pos]
        if tok is LogicToken.TRUE:
            return True, pos + 1
        if tok is LogicToken.FALSE:
            return False, pos + 1
        if tok is LogicToken.NOT:
            value, nxt = parse(pos + 1)
            return not value, nxt
        if tok is LogicToken.LPAREN:
            left, nxt = parse(pos + 1)
            if nxt >= len(tokens) or tokens[nxt] not in _BINARY_OPS:
                raise FormulaError("expected a binary operator", nxt)
            op = tokens[nxt]
            right, nxt = parse(nxt + 1)
            if nxt >= len(tokens) or tokens[nxt] is not LogicToken.RPAREN:
                raise FormulaError("expected ')'", nxt)
            return _apply(op, left, right), nxt + 1
        raise FormulaError(f"unexpected token {tok.name}", pos)

    value, end = parse(0)
    if end != len(tokens):
        raise FormulaError("trailing tokens after formula", end)
    return value


def sample_formula(length: int, rng):
    """Random well-formed formula of exactly ``length`` tokens."""
    if length < 1:
        raise ConfigError(f"formula length must be >= 1, got {length}")
    if length == 1:
        return [LogicToken.TRUE if rng.random() < 0.5 else LogicToken.FALSE]
    if length < 5 or rng.random() < 0.35:
        return [LogicToken.NOT] + sample_formula(length - 1, rng)
    left_len = int(rng.integers(1, length - 3))  # both operands >= 1 token
    op = _BINARY_OPS[int(rng.integers(0, 4))]
    return (
        [LogicToken.LPAREN]
        + sample_formula(left_len, rng)
        + [op]
        + sample_formula(length - 3 - left_len, rng)
        + [LogicToken.RPAREN]
    )


def sample_formula_with_truth(length: int, target: bool, rng, max_tries: int = 64):
    """Sample until the formula evaluates to ``target`` (keeps the generated
    truth values balanced); gives up on the last draw if never matched."""
    tokens = None
    for _ in range(max_tries):
        tokens = sample_formula(length, rng)
        if evaluate_formula(tokens) == target:
            return tokens
    return tokens
