import pytest

from querylab.boolfn import (
    UNDEFINED,
    ComposedFunction,
    FunctionName,
    TableFunction,
    catalog,
    compose,
    parse_function,
    which_gapor,
)
from querylab.errors import FunctionSpecError


class TestCatalog:
    def test_maj_ties_resolve_to_one(self):
        maj = catalog("maj", 4)
        assert maj.evaluate((1, 1, 0, 0)) == 1
        assert maj.evaluate((1, 0, 0, 0)) == 0

    @pytest.mark.parametrize("bits, expected", [
        ((0, 0, 0), 0),
        ((1, 0, 0), 1),
        ((0, 1, 0), 0),
        ((1, 1, 0), 0),
        ((0, 1, 1), 1),
    ])
    def test_omb_reads_highest_one_position(self, bits, expected):
        assert catalog(FunctionName.OMB, 3).evaluate(bits) == expected

    def test_which(self):
        which = catalog("which")
        assert which.arity == 2
        assert which.evaluate((1, 0)) == 0
        assert which.evaluate((0, 1)) == 1
        assert which.evaluate((1, 1)) is UNDEFINED
        assert which.evaluate((0, 0)) is UNDEFINED

    def test_gapor_and_complement(self):
        gapor, notgapor = catalog("gapor", 4), catalog("not-gapor", 4)
        assert gapor.evaluate((0, 0, 0, 0)) == 0
        assert gapor.evaluate((1, 0, 1, 0)) == 1
        assert gapor.evaluate((1, 0, 0, 0)) is UNDEFINED
        for bits in gapor.promise_inputs():
            assert notgapor.evaluate(bits) == 1 - gapor.evaluate(bits)

    def test_gapmaj_promise(self):
        gapmaj = catalog("gapmaj", 6)
        assert gapmaj.evaluate((1, 1, 0, 0, 0, 0)) == 0
        assert gapmaj.evaluate((1, 1, 1, 1, 0, 0)) == 1
        assert gapmaj.evaluate((1, 1, 1, 0, 0, 0)) is UNDEFINED
        assert len(list(gapmaj.promise_inputs())) == 30

    def test_id_is_not_boolean(self):
        ident = catalog("id", 2)
        assert not ident.is_boolean
        assert ident.evaluate((1, 0)) == (1, 0)
        assert len(ident.outputs()) == 4

    @pytest.mark.parametrize("name, size", [("gapmaj", 7), ("gapor", 3), ("maj", 3), ("which", 3), ("or", 0)])
    def test_size_rules(self, name, size):
        with pytest.raises(FunctionSpecError):
            catalog(name, size)

    def test_unknown_name(self):
        with pytest.raises(FunctionSpecError, match="unknown function"):
            catalog("nand", 2)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            catalog("or", 3).evaluate((1, 0))


class TestComposition:
    def test_parse_and_evaluate(self):
        f = parse_function("xor[2] o gapmaj[3]")
        assert f.arity == 6
        assert f.evaluate((1, 0, 0, 1, 1, 0)) == 1
        assert f.evaluate((1, 0, 0, 0, 1, 0)) == 0
        assert f.evaluate((1, 1, 1, 0, 1, 0)) is UNDEFINED

    def test_chains_associate_right(self):
        f = parse_function("or[2] o which o gapor[2]")
        assert isinstance(f, ComposedFunction)
        assert f.outer.name == "or[2]"
        assert isinstance(f.inner, ComposedFunction)
        assert f.arity == 8

    @pytest.mark.parametrize("text", ["", "xor[", "foo[3]", "xor[8] o", "gapmaj[4] o or[2]"])
    def test_parse_errors(self, text):
        with pytest.raises(FunctionSpecError):
            parse_function(text)

    def test_inner_must_be_boolean(self):
        with pytest.raises(FunctionSpecError):
            compose(catalog("or", 2), catalog("id", 2))

    def test_which_gapor_promise(self):
        f = which_gapor(4)
        inputs = f.labelled_inputs()
        # one all-zero block times six half-weight blocks, for each of the two sides
        assert len(inputs) == 12
        for bits, label in inputs:
            left = sum(bits[:4])
            assert label == (0 if left else 1)

    def test_composed_promise_inputs_are_in_promise(self):
        f = parse_function("maj[2] o gapmaj[3]")
        for bits in f.promise_inputs():
            assert f.in_promise(bits)


class TestTableFunction:
    def test_from_truth(self):
        f = TableFunction.from_truth(2, [0, 1, 1, 0])
        assert f.name == "table[0110]"
        assert [f.evaluate(x) for x in ((0, 0), (0, 1), (1, 0), (1, 1))] == [0, 1, 1, 0]
        assert f.is_boolean
        assert f.outputs() == (0, 1)

    def test_constant_table_has_one_output(self):
        assert TableFunction.from_truth(1, [1, 1]).outputs() == (1,)

    def test_partial_table(self):
        f = TableFunction(name="partial", arity=2, table=(((0, 0), 0), ((1, 1), 1)))
        assert f.evaluate((0, 1)) is UNDEFINED
        assert list(f.promise_inputs()) == [(0, 0), (1, 1)]

    def test_truth_length(self):
        with pytest.raises(FunctionSpecError):
            TableFunction.from_truth(2, [0, 1, 1])
