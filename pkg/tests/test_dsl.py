import random
from fractions import Fraction

import pytest

from cesaro.dsl import (
    DslError,
    DslSemanticError,
    DslSyntaxError,
    format_set_expr,
    from_json,
    parse_set_expr,
    register_predicate,
    to_json,
)
from cesaro.sets import (
    EVENS,
    ODDS,
    Blocks,
    BlockSpec,
    Complement,
    Difference,
    Finite,
    Greedy,
    Intersection,
    NullModPart,
    Residue,
    SymmDiff,
    Union,
)

import oracle

CORPUS = [oracle.random_expr(random.Random(seed)) for seed in range(50)]


@pytest.mark.parametrize("e", CORPUS, ids=[f"expr{i}" for i in range(50)])
def test_print_parse_round_trip(e):
    text = format_set_expr(e)
    assert parse_set_expr(text) == e
    assert format_set_expr(parse_set_expr(text)) == text


@pytest.mark.parametrize("e", CORPUS[:20], ids=[f"expr{i}" for i in range(20)])
def test_json_round_trip(e):
    assert from_json(to_json(e)) == e


def test_precedence():
    assert parse_set_expr("evens | odds & squares") == Union(EVENS, Intersection(ODDS, parse_set_expr("squares")))
    assert parse_set_expr("~evens & odds") == Intersection(Complement(EVENS), ODDS)
    assert parse_set_expr("nat \\ evens \\ odds") == Difference(Difference(parse_set_expr("nat"), EVENS), ODDS)
    assert parse_set_expr("evens ^ odds | {1}") == Union(SymmDiff(EVENS, ODDS), Finite((1,)))


def test_right_operand_parenthesized():
    e = Difference(EVENS, Difference(ODDS, Finite((1,))))
    assert format_set_expr(e) == "residue(0 mod 2) \\ (residue(1 mod 2) \\ {1})"
    assert parse_set_expr(format_set_expr(e)) == e


def test_calls():
    assert parse_set_expr("residue(3 mod 7)") == Residue(3, 7)
    assert parse_set_expr("blocks(2^(n-1))") == Blocks(BlockSpec.geometric(2))
    assert parse_set_expr("blocks(3*2^(n-1))") == Blocks(BlockSpec.geometric(2, 3))
    assert parse_set_expr("blocks(n^2)") == Blocks(BlockSpec.power(2))
    assert parse_set_expr("blocks(seq(1, 2; 3))") == Blocks(BlockSpec.periodic([1, 2], [3]))
    assert parse_set_expr("greedy(2/5)") == Greedy(Fraction(2, 5))
    assert parse_set_expr("nullmod(odds, 1/2)") == NullModPart(ODDS, Fraction(1, 2))
    assert parse_set_expr("{3, 1, 3}") == Finite((1, 3))


def test_predicate_registry():
    register_predicate("mult7", lambda n: n % 7 == 0)
    e = parse_set_expr("pred(mult7)")
    assert e.count(70) == 10


@pytest.mark.parametrize(
    "text, cls, col",
    [
        ("(", DslSyntaxError, 2),
        ("evens |", DslSyntaxError, 8),
        ("foo", DslSyntaxError, 1),
        ("residue(0 mod 0)", DslSemanticError, 15),
        ("residue(5 mod 3)", DslSemanticError, 9),
        ("greedy(3/2)", DslSemanticError, 8),
        ("{0}", DslSemanticError, 1),
        ("evens )", DslSyntaxError, 7),
    ],
)
def test_errors_report_position(text, cls, col):
    with pytest.raises(cls) as info:
        parse_set_expr(text)
    assert info.value.column == col
    assert info.value.caret().splitlines()[1] == " " * (col - 1) + "^"


def test_multiline_error_line():
    with pytest.raises(DslError) as info:
        parse_set_expr("evens |\n  &")
    assert (info.value.line, info.value.column) == (2, 3)
