import pytest
from hypothesis import given, strategies as st

from tabalg.evaluate import (
    Denotation,
    ModelRun,
    UnitLexicon,
    ensemble_vote,
    flexible_da,
    perturb_columns,
    strict_da,
    strip_units,
)
from tabalg.values import Cell, NULL_CELL, Table


def D(*values):
    return Denotation.of(values)


def test_strict_da_order_insensitive():
    assert strict_da(D("b", "a"), D("a", "b"))
    assert strict_da(D(), D())
    assert not strict_da(D("a"), D("a", "a"))  # multiset reading


def test_strict_da_set_equality_flag():
    assert strict_da(D("a"), D("a", "a"), set_equality=True)


def test_strict_da_normalizes_case_and_spaces():
    assert strict_da(D("  Fauldhouse  United "), D("fauldhouse united"))


def test_strip_units_examples():
    assert strip_units("2005 years") == "2005"
    assert strip_units("$1,000") == "1000"
    assert strip_units("fauldhouse") == "fauldhouse"
    assert strip_units("5.4 kg") == "5.4"
    assert strip_units("60 km") == "60"
    assert strip_units("95%") == "95"
    assert strip_units("  42  ") == "42"


def test_strip_units_custom_lexicon(tmp_path):
    path = tmp_path / "units.json"
    path.write_text('{"currency_prefixes": ["¥"], "suffix_units": ["points"]}', encoding="utf-8")
    lex = UnitLexicon.load(path)
    assert strip_units("¥5", lex) == "5"
    assert strip_units("3 points", lex) == "3"
    assert strip_units("$5", lex) == "$5"  # no longer in the lexicon


def test_flexible_da_examples():
    assert flexible_da(D("1000"), D("1,000 kg"))
    assert not flexible_da(D("2"), D("3"))
    assert flexible_da(D("$1,200"), D("1200"))


texts = st.one_of(
    st.sampled_from(["fauldhouse", "1000", "$1,000", "2005 years", "a b", "A  B", ""]),
    st.text(max_size=10),
)
denotations = st.lists(texts, max_size=4).map(Denotation.of)


@given(denotations, denotations)
def test_strict_implies_flexible(pred, gold):
    if strict_da(pred, gold):
        assert flexible_da(pred, gold)


@given(denotations, denotations)
def test_da_symmetric(pred, gold):
    assert strict_da(pred, gold) == strict_da(gold, pred)
    assert flexible_da(pred, gold) == flexible_da(gold, pred)


@given(denotations)
def test_da_reflexive(d):
    assert strict_da(d, d)
    assert flexible_da(d, d)


@given(texts)
def test_strip_units_idempotent(value):
    once = strip_units(value)
    assert strip_units(once) == once


@given(denotations, st.randoms())
def test_da_shuffle_invariant(d, rng):
    shuffled = list(d.values)
    rng.shuffle(shuffled)
    assert strict_da(Denotation.of(shuffled), d)


def run(model_id, fda, **preds):
    return ModelRun(model_id, {k: D(*v) for k, v in preds.items()}, fda)


def test_ensemble_single_run():
    r = run("m1", 0.5, q=["a"])
    assert ensemble_vote([r], "q") == D("a")


def test_ensemble_majority():
    runs = [
        run("m1", 0.1, q=["a"]),
        run("m2", 0.2, q=["b"]),
        run("m3", 0.3, q=["a"]),
    ]
    assert ensemble_vote(runs, "q") == D("a")


def test_ensemble_fda_tie_break():
    runs = [run("m1", 0.60, q=["a"]), run("m2", 0.55, q=["b"])]
    assert ensemble_vote(runs, "q") == D("a")
    runs = [run("m1", 0.55, q=["a"]), run("m2", 0.60, q=["b"])]
    assert ensemble_vote(runs, "q") == D("b")


def test_ensemble_residual_tie_breaks():
    # equal counts and equal fda sums: the group with the single best run wins
    runs = [
        run("m1", 0.50, q=["a"]),
        run("m2", 0.10, q=["a"]),
        run("m3", 0.35, q=["b"]),
        run("m4", 0.25, q=["b"]),
    ]
    assert ensemble_vote(runs, "q") == D("a")
    # fully symmetric: lowest model id decides
    runs = [run("m2", 0.4, q=["b"]), run("m1", 0.4, q=["a"])]
    assert ensemble_vote(runs, "q") == D("a")


def test_ensemble_duplicate_of_winner_keeps_winner():
    runs = [
        run("m1", 0.3, q=["a"]),
        run("m2", 0.2, q=["a"]),
        run("m3", 0.9, q=["b"]),
    ]
    assert ensemble_vote(runs, "q") == D("a")
    runs.append(run("m4", 0.1, q=["a"]))
    assert ensemble_vote(runs, "q") == D("a")


def test_ensemble_normalised_grouping():
    runs = [
        run("m1", 0.1, q=["Fauldhouse "]),
        run("m2", 0.2, q=["fauldhouse"]),
        run("m3", 0.9, q=["other"]),
    ]
    voted = ensemble_vote(runs, "q")
    assert strict_da(voted, D("fauldhouse"))


def table_of(rows, header=("a", "b")):
    def cell(v):
        if v is None:
            return NULL_CELL
        return Cell.number(v) if isinstance(v, int) else Cell.text(v)

    return Table.build([[cell(v) for v in row] for row in rows], header=header)


def test_perturb_identity_when_nothing_visible():
    t = table_of([[1, "x"], [2, "y"]])
    assert perturb_columns(t, 0, seed=1) == t


def test_perturb_deterministic_and_prefix_only():
    t = table_of([[1, "a"], [2, "b"], [3, "c"], [4, "d"], [5, "e"]])
    p1 = perturb_columns(t, 3, seed=99)
    p2 = perturb_columns(t, 3, seed=99)
    assert p1 == p2
    assert p1.rows[3:] == t.rows[3:]
    for c in range(t.n_cols):
        assert sorted(str(x) for x in (r[c] for r in p1.rows[:3])) == sorted(
            str(x) for x in (r[c] for r in t.rows[:3])
        )


def test_perturb_columns_independent():
    t = table_of([[i, f"r{i}"] for i in range(1, 7)])
    p = perturb_columns(t, 6, seed=5)
    # at least one row loses coherence between its two columns
    assert any(f"r{r[0].value}" != r[1].value for r in p.rows)


def test_perturb_rejects_bad_visible_count():
    t = table_of([[1, "x"]])
    with pytest.raises(ValueError):
        perturb_columns(t, 2, seed=0)


def test_perturb_golden_fixed_seed():
    t = table_of([[1, "a"], [2, "b"], [3, "c"], [4, "d"]])
    p = perturb_columns(t, 4, seed=7)
    ids = [int(r[0].value) for r in p.rows]
    texts_ = [r[1].value for r in p.rows]
    assert ids == [int(r[0].value) for r in perturb_columns(t, 4, seed=7).rows]
    assert sorted(ids) == [1, 2, 3, 4]
    assert sorted(texts_) == ["a", "b", "c", "d"]
