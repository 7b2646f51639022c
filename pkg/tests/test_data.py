import numpy as np
import pytest

from ucode.data import (BUILTINS, DataFormatError, DatasetBundle, SbmConfig,
                        bowtie, builtin, expected_edge_count, load_bundle,
                        save_bundle, sbm_generate, triangle)
from ucode.graph import GraphValidationError
from ucode.metrics import nmi
from ucode.partition import Cover, Partition


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_bytes(text.encode("utf-8"))
    return path


def test_path_graph(tmp_path):
    b = DatasetBundle(_write(tmp_path, "e.tsv", "0\t1\n1\t2\n"),
                      _write(tmp_path, "f.csv", "1,0\n0,1\n1,1\n"))
    g = load_bundle(b)
    assert g.n == 3
    assert g.edges.tolist() == [[0, 1], [1, 2]]
    np.testing.assert_array_equal(g.features, [[1, 0], [0, 1], [1, 1]])


def test_reversed_duplicate_is_one_edge(tmp_path):
    g = load_bundle(DatasetBundle(_write(tmp_path, "e.tsv", "0\t1\n1\t0\n0\t1\n")))
    assert g.n_edges == 1


def test_feature_row_mismatch_named(tmp_path):
    b = DatasetBundle(_write(tmp_path, "e.tsv", "0\t1\n1\t2\n"), _write(tmp_path, "f.csv", "1\n2\n"))
    with pytest.raises(DataFormatError, match="2 feature rows.*3 nodes"):
        load_bundle(b)


def test_parse_error_names_line(tmp_path):
    b = DatasetBundle(_write(tmp_path, "e.tsv", "# header\n0\t1\n1 2 3\n"))
    with pytest.raises(DataFormatError, match=":3:"):
        load_bundle(b)
    b = DatasetBundle(_write(tmp_path, "e2.tsv", "0\t1\n"), _write(tmp_path, "f.csv", "1,2\nx,3\n"))
    with pytest.raises(DataFormatError, match=":2:"):
        load_bundle(b)


def test_comments_and_crlf(tmp_path):
    g = load_bundle(DatasetBundle(_write(tmp_path, "e.tsv", "# edges\r\n0\t1 # first\r\n\r\n1\t2\r\n")))
    assert g.edges.tolist() == [[0, 1], [1, 2]]


def test_self_loop_in_file(tmp_path):
    with pytest.raises(DataFormatError, match="self-loop"):
        load_bundle(DatasetBundle(_write(tmp_path, "e.tsv", "0\t0\n")))


def test_string_node_labels_remapped(tmp_path):
    b = DatasetBundle(_write(tmp_path, "e.tsv", "bob\talice\nalice\tcarol\n"),
                      cover=_write(tmp_path, "c.tsv", "x\talice\nx\tbob\ny\tcarol\n"))
    g = load_bundle(b)
    assert g.node_labels == ("alice", "bob", "carol")
    assert g.edges.tolist() == [[0, 1], [0, 2]]
    assert g.ground_truth == Cover([{0, 1}, {2}], 3)


def test_labels_ground_truth(tmp_path):
    b = DatasetBundle(_write(tmp_path, "e.tsv", "0\t1\n"), labels=_write(tmp_path, "l.txt", "3\n4\n"))
    assert load_bundle(b).ground_truth == Partition([3, 4])
    b = DatasetBundle(_write(tmp_path, "e.tsv", "0\t1\n"), labels=_write(tmp_path, "l2.txt", "3\n"))
    with pytest.raises(DataFormatError):
        load_bundle(b)


def test_isolated_nodes_from_feature_rows(tmp_path):
    b = DatasetBundle(_write(tmp_path, "e.tsv", "0\t1\n"), _write(tmp_path, "f.csv", "1\n2\n3\n4\n"))
    assert load_bundle(b).degrees.tolist() == [1, 1, 0, 0]


@pytest.mark.parametrize("overlap", [0.0, 0.2])
def test_round_trip(tmp_path, overlap):
    g = sbm_generate(SbmConfig(n=30, k_planted=3, p_in=0.4, p_out=0.05, overlap_fraction=overlap, seed=5))
    back = load_bundle(save_bundle(g, tmp_path / "bundle"))
    assert back.n == g.n
    assert np.array_equal(back.edges, g.edges)
    assert np.array_equal(back.features, g.features)
    assert back.ground_truth == g.ground_truth


def test_round_trip_with_string_labels(tmp_path):
    b = DatasetBundle(_write(tmp_path, "e.tsv", "b\ta\nc\tb\n"))
    g = load_bundle(b)
    back = load_bundle(save_bundle(g, tmp_path / "out"))
    assert back.node_labels == g.node_labels
    assert np.array_equal(back.edges, g.edges)


def test_from_dir(tmp_path):
    save_bundle(bowtie(), tmp_path)
    b = DatasetBundle.from_dir(tmp_path)
    assert b.cover is not None and b.labels is None
    assert load_bundle(b).ground_truth == bowtie().ground_truth


def test_bowtie_builtin():
    g = bowtie()
    assert g.degrees.tolist() == [2, 2, 4, 2, 2]
    assert g.n_edges == 6
    assert g.ground_truth == Cover([{0, 1, 2}, {2, 3, 4}], 5)
    assert all(2 in s for s in g.ground_truth.sets)


def test_builtins():
    assert set(BUILTINS) == {"bowtie", "triangle"}
    assert triangle().n_edges == 3
    assert builtin("bowtie").n == 5
    with pytest.raises(ValueError):
        builtin("pentagram")


def test_sbm_degenerate_probabilities():
    g = sbm_generate(SbmConfig(n=4, k_planted=2, p_in=1.0, p_out=0.0, feature_dim=2))
    assert g.edges.tolist() == [[0, 1], [2, 3]]
    g = sbm_generate(SbmConfig(n=6, k_planted=2, p_in=1.0, p_out=0.0, feature_dim=2))
    assert g.edges.tolist() == [[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5]]


def test_sbm_without_signal_has_low_nmi():
    # with p_in = p_out the planted split is invisible to any structural method
    from ucode.assignment import hard_assign
    from ucode.trainer import TrainConfig, predict_membership, train
    scores = []
    for seed in range(3):
        g = sbm_generate(SbmConfig(n=80, k_planted=4, p_in=0.1, p_out=0.1,
                                   feature_separation=0.0, seed=seed))
        params, _ = train(g, TrainConfig(epochs=60, hidden=32, k=4, seed=seed))
        scores.append(nmi(g.ground_truth, hard_assign(predict_membership(g, params))))
    assert np.mean(scores) < 0.2


def test_sbm_deterministic():
    cfg = SbmConfig(n=100, k_planted=4, p_in=0.3, p_out=0.02, seed=3)
    a, b = sbm_generate(cfg), sbm_generate(cfg)
    assert np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.features, b.features)
    assert not np.array_equal(a.edges, sbm_generate(SbmConfig(seed=4)).edges)


def test_sbm_blocks_and_overlap():
    g = sbm_generate(SbmConfig(n=10, k_planted=3))
    assert g.ground_truth.labels.tolist() == [0, 0, 0, 0, 1, 1, 1, 2, 2, 2]
    g = sbm_generate(SbmConfig(n=40, k_planted=4, overlap_fraction=0.25, seed=1))
    counts = g.ground_truth.membership_matrix().sum(axis=1)
    assert counts.max() == 2 and int((counts == 2).sum()) == 10


def test_sbm_edge_count_concentrates():
    counts = [sbm_generate(SbmConfig(n=200, k_planted=4, seed=s)).n_edges for s in range(50)]
    expected = expected_edge_count(SbmConfig(n=200, k_planted=4))
    # 4 blocks of 50: 4 * C(50, 2) * 0.3 + (C(200, 2) - 4 * C(50, 2)) * 0.02
    assert expected == pytest.approx(4 * 1225 * 0.3 + (19900 - 4900) * 0.02)
    assert abs(np.mean(counts) - expected) / expected < 0.05


def test_sbm_features_separate_blocks():
    g = sbm_generate(SbmConfig(n=200, k_planted=2, feature_separation=4.0, seed=0))
    x = g.features
    means = [x[g.ground_truth.labels == j].mean(axis=0) for j in range(2)]
    assert np.linalg.norm(means[0] - means[1]) > 3.0
    assert np.std(x - np.array(means)[g.ground_truth.labels]) == pytest.approx(1.0, abs=0.1)


@pytest.mark.parametrize("kwargs", [dict(p_in=1.5), dict(p_out=-0.1), dict(overlap_fraction=1.0),
                                    dict(n=3, k_planted=4), dict(feature_dim=0)])
def test_sbm_config_validation(kwargs):
    with pytest.raises(ValueError):
        SbmConfig(**kwargs)


def test_invalid_graph_from_files(tmp_path):
    b = DatasetBundle(_write(tmp_path, "e.tsv", "0\t1\n"), _write(tmp_path, "f.csv", "1\nnan\n"))
    with pytest.raises(GraphValidationError):
        load_bundle(b)
