import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xai_audit.data import (
    Dataset,
    SyntheticSpec,
    generate_synthetic,
    imbalance_degree,
    load_csv,
    pearson_matrix,
    profile_counts,
    profile_imbalance,
    prune_correlated,
    split,
    split_indices,
    standardize,
    write_csv,
)
from xai_audit.errors import DataError


def make(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or [f"f{i}" for i in range(X.shape[1])]
    return Dataset(tuple(names), X, np.asarray(y))


# -- Dataset ---------------------------------------------------------------


def test_dataset_rejects_nan():
    with pytest.raises(DataError, match="NaN"):
        make([[1.0, np.nan]], [1])


def test_dataset_rejects_duplicate_names():
    with pytest.raises(DataError, match="duplicate"):
        make([[1.0, 2.0]], [1], ["a", "a"])


def test_dataset_is_read_only():
    d = make([[1.0, 2.0]], [1])
    with pytest.raises(ValueError):
        d.X[0, 0] = 5.0


# -- CSV -------------------------------------------------------------------


def test_load_smallest_csv(tmp_path):
    p = tmp_path / "tiny.csv"
    p.write_text("a,b,Label\n1,2,attack\n3,4,benign\n")
    d = load_csv(p, "Label", {"attack"})
    assert d.feature_names == ("a", "b")
    np.testing.assert_array_equal(d.X, [[1, 2], [3, 4]])
    np.testing.assert_array_equal(d.y, [1, 0])


def test_load_drops_columns(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("Unnamed:0,nan,a,Attack Type,Label\n0,9,1.5,dos,1\n1,9,2.5,none,0\n")
    d = load_csv(p, "Label", {"1"}, {"Unnamed:0", "nan", "Label", "Attack Type", "Attack Tool"})
    assert d.feature_names == ("a",)


def test_load_field_count_mirrors_5g_layout(tmp_path):
    # 96 fields, five of them dropped -> 91 features
    drops = ["Unnamed:0", "nan", "Label", "Attack Type", "Attack Tool"]
    names = drops[:2] + [f"f{i}" for i in range(91)] + drops[2:]
    assert len(names) == 96
    row = ["0", "0"] + ["1.0"] * 91 + ["Malicious", "x", "y"]
    p = tmp_path / "g.csv"
    p.write_text(",".join(names) + "\n" + ",".join(row) + "\n")
    d = load_csv(p, "Label", {"Malicious"}, drops)
    assert d.n_features == 91


@pytest.mark.parametrize(
    "content, label, match",
    [
        ("a,b\n1,2\n", "Label", "label column"),
        ("a,a,Label\n1,2,1\n", "Label", "duplicate header"),
        ("a,b,Label\n1,x,1\n", "Label", "non-numeric"),
        ("a,b,Label\n1,inf,1\n", "Label", "non-finite"),
    ],
)
def test_load_errors_are_distinct(tmp_path, content, label, match):
    p = tmp_path / "bad.csv"
    p.write_text(content)
    with pytest.raises(DataError, match=match):
        load_csv(p, label, {"1"})


def test_load_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "nope.csv")


def test_csv_round_trip_is_bit_exact(tmp_path):
    d = generate_synthetic(SyntheticSpec(n_rows=300, n_correlated_pairs=2), seed=5)
    back = load_csv(write_csv(d, tmp_path / "s.csv"), "Label", {"1"})
    assert back.equals(d)
    assert back.X.tobytes() == d.X.tobytes()


# -- imbalance -------------------------------------------------------------

# (attack %, benign %, degree) rounded shares, plus (total, attack) counts
PUBLIC_DATASETS = [
    ("5G", 61, 39, "Mild", 1215890, 738153),
    ("UDBLag", 99, 1, "Extreme", 674463, 670447),
    ("CIC-DDoS2019", 99.9, 0.1, "Extreme", 50063112, 50006249),
    ("CIC-IDS2018", 17, 83, "Moderate", 10974408, 1865649),
    ("CIC-IDS2017", 84, 16, "Moderate", 2810677, 2359087),
    ("NSL-KDD", 81, 19, "Moderate", 311027, 250436),
    ("NF-TON-IoT-V2", 64, 36, "Mild", 16940496, 10841027),
    ("CIDDS-001", 62, 38, "Mild", 172838, 107343),
    ("CIDDS-002", 67, 33, "Mild", 1048576, 699051),
    ("UNSW-NB15", 13, 87, "Severe", 2540044, 321283),
    ("CICIoV2024", 13, 87, "Severe", 1408219, 184482),
    ("CICEV2023", 92, 8, "Severe", 63284, 58000),
]


@pytest.mark.parametrize("name, attack, benign, degree, total, positives", PUBLIC_DATASETS)
def test_public_dataset_degrees_from_rounded_shares(name, attack, benign, degree, total, positives):
    assert imbalance_degree(max(attack, benign) / 100) == degree


@pytest.mark.parametrize("name, attack, benign, degree, total, positives", PUBLIC_DATASETS)
def test_public_dataset_degrees_from_counts(name, attack, benign, degree, total, positives):
    assert profile_counts(total, positives).degree == degree


@pytest.mark.parametrize("m, degree", [(0.5, "Balanced"), (0.5999, "Balanced"), (0.6, "Mild"),
                                       (0.75, "Moderate"), (0.85, "Severe"), (0.99, "Extreme"),
                                       (1.0, "Extreme")])
def test_degree_boundaries(m, degree):
    assert imbalance_degree(m) == degree


def test_single_class_is_extreme():
    p = profile_imbalance(make([[0.0], [1.0]], [1, 1]))
    assert p.majority_fraction == 1.0 and p.degree == "Extreme"


def test_profile_empty_is_error():
    with pytest.raises(DataError):
        profile_counts(0, 0)


# -- correlation -----------------------------------------------------------


def test_pearson_examples():
    d = make(np.array([[1, 3, 1], [2, 2, 2], [3, 1, 4]]), [0, 1, 0])
    r = pearson_matrix(d).r
    assert r[0, 0] == 1.0
    assert r[0, 1] == pytest.approx(-1.0, abs=1e-15)
    # hand value: sum dx*dy = 3, sum dx^2 = 2, sum dy^2 = 42/9 -> r = 9 / sqrt(84)
    assert r[0, 2] == pytest.approx(9 / math.sqrt(84), abs=1e-14)
    assert r[0, 2] == pytest.approx(0.98198, abs=1e-5)


def test_pearson_constant_column_flagged_not_zero():
    cm = pearson_matrix(make([[1, 5], [2, 5], [3, 5]], [0, 1, 0]))
    assert cm.undefined[0, 1] and cm.undefined[1, 1]
    assert np.isnan(cm.r[0, 1])
    assert cm.constant_columns == ("f1",)


def test_pearson_needs_two_rows():
    with pytest.raises(DataError):
        pearson_matrix(make([[1.0, 2.0]], [1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_pearson_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    d = make(rng.normal(size=(20, 4)), rng.integers(0, 2, 20))
    r = pearson_matrix(d).r
    np.testing.assert_array_equal(r, r.T)
    assert np.all(np.abs(r) <= 1.0)


def test_prune_removes_both_members_of_planted_pair():
    rng = np.random.default_rng(0)
    f = rng.normal(size=200)
    X = np.column_stack([f, f + 1e-3 * rng.normal(size=200), rng.normal(size=200)])
    res = prune_correlated(make(X, rng.integers(0, 2, 200)))
    assert res.removed == {"f0", "f1"}
    assert res.dataset.feature_names == ("f2",)


def test_prune_keep_one_mode():
    rng = np.random.default_rng(0)
    f = rng.normal(size=200)
    X = np.column_stack([f, f + 1e-3 * rng.normal(size=200), rng.normal(size=200)])
    res = prune_correlated(make(X, rng.integers(0, 2, 200)), keep_one=True)
    assert res.removed == {"f1"}
    assert res.dataset.feature_names == ("f0", "f2")


def test_prune_reports_constant_columns_separately():
    rng = np.random.default_rng(1)
    X = np.column_stack([rng.normal(size=50), np.full(50, 3.0), rng.normal(size=50)])
    res = prune_correlated(make(X, rng.integers(0, 2, 50)))
    assert res.constant == {"f1"} and res.removed == frozenset()


def test_prune_everything_is_error():
    f = np.arange(10.0)
    with pytest.raises(DataError, match="every feature"):
        prune_correlated(make(np.column_stack([f, 2 * f]), [0, 1] * 5))


@pytest.mark.parametrize("keep_one", [False, True])
def test_prune_leaves_no_strong_pair(keep_one):
    d = generate_synthetic(SyntheticSpec(n_rows=1000, n_correlated_pairs=4), seed=2)
    out = prune_correlated(d, 0.95, keep_one=keep_one).dataset
    assert pearson_matrix(out).strong_pairs(0.95) == []


def test_synthetic_planted_pairs_are_pruned():
    spec = SyntheticSpec(n_rows=2000, n_informative=3, n_noise=4, n_correlated_pairs=3,
                         correlation_noise=0.05)
    d = generate_synthetic(spec, seed=9)
    cm = pearson_matrix(d)
    for i in range(3):
        a, b = d.feature_names.index(f"corr_{i}_a"), d.feature_names.index(f"corr_{i}_b")
        assert abs(cm.r[a, b]) >= 0.95
    assert len(prune_correlated(d).removed) >= 6


# -- split / standardize ---------------------------------------------------


def test_split_stratification_arithmetic():
    d = make(np.arange(1000.0)[:, None], [0] * 500 + [1] * 500)
    train, test = split(d, 0.25, seed=3)
    assert test.n_rows == 250
    assert int(test.y.sum()) == 125


def test_split_deterministic():
    y = np.array([0, 1] * 50)
    a = split_indices(y, 0.15, 7)
    b = split_indices(y, 0.15, 7)
    assert all(np.array_equal(p, q) for p, q in zip(a, b))


def test_default_split_is_85_15():
    d = make(np.arange(200.0)[:, None], [0, 1] * 100)
    train, test = split(d, seed=0)
    assert (train.n_rows, test.n_rows) == (170, 30)


def test_split_too_few_rows_in_a_class():
    with pytest.raises(DataError, match="too few"):
        split_indices(np.array([0] * 20 + [1]), 0.15, 0)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=2, max_value=300),
    st.integers(min_value=2, max_value=300),
    st.floats(min_value=0.05, max_value=0.5),
    st.integers(min_value=0, max_value=2**31),
)
def test_split_partition_properties(n0, n1, frac, seed):
    y = np.array([0] * n0 + [1] * n1)
    try:
        tr, te = split_indices(y, frac, seed)
    except DataError:
        return
    assert np.intersect1d(tr, te).size == 0
    np.testing.assert_array_equal(np.sort(np.concatenate([tr, te])), np.arange(y.size))
    for cls, n in ((0, n0), (1, n1)):
        assert abs(np.sum(y[te] == cls) - n * frac) <= 1


def test_standardize_examples():
    train = make([[2.0, 5.0], [4.0, 5.0]], [0, 1])
    test = make([[3.0, 7.0]], [1])
    tr, te, params = standardize(train, test)
    np.testing.assert_array_equal(tr.X[:, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(tr.X[:, 1], [0.0, 0.0])
    np.testing.assert_array_equal(te.X, [[0.0, 0.0]])
    assert params.mean[0] == 3.0 and params.scale[0] == 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_standardize_moments(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(3.0, 7.0, size=(50, 3)) * np.array([1.0, 1e3, 1e-3])
    tr, _, _ = standardize(make(X, rng.integers(0, 2, 50)), make(X[:2], [0, 1]))
    assert np.all(np.abs(tr.X.mean(axis=0)) <= 1e-10)
    assert np.all(np.abs(tr.X.std(axis=0) - 1.0) <= 1e-10)


# -- synthetic -------------------------------------------------------------


def test_synthetic_extreme_imbalance():
    d = generate_synthetic(SyntheticSpec(n_rows=1000, positive_fraction=0.99), seed=1)
    assert profile_imbalance(d).degree == "Extreme"


def test_synthetic_deterministic():
    spec = SyntheticSpec(n_rows=500, n_correlated_pairs=2)
    a, b = generate_synthetic(spec, 4), generate_synthetic(spec, 4)
    assert a.X.tobytes() == b.X.tobytes() and a.y.tobytes() == b.y.tobytes()


def test_synthetic_layout():
    spec = SyntheticSpec(n_rows=10, n_informative=2, n_noise=1, n_correlated_pairs=1)
    d = generate_synthetic(spec, 0)
    assert d.feature_names == ("inf_0", "inf_1", "noise_0", "corr_0_a", "corr_0_b")
    assert d.n_features == spec.n_features == 5


@pytest.mark.parametrize("bad", [dict(positive_fraction=0.0), dict(positive_fraction=1.0),
                                 dict(class_separation=-1.0), dict(correlation_noise=0.0),
                                 dict(n_informative=0, n_noise=0)])
def test_synthetic_invalid_spec(bad):
    with pytest.raises(DataError):
        generate_synthetic(SyntheticSpec(**bad), 0)
