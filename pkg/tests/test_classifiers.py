import numpy as np
import pytest

from numrec.classifiers import (
    KnnModel,
    LabeledSample,
    LinearModel,
    dump_model_bytes,
    knn_predict,
    knn_train,
    l2_normalize,
    linear_predict,
    linear_train,
    load_model_bytes,
)
from numrec.config import ConfigError


def make_samples(X, y):
    return [LabeledSample(np.asarray(f, dtype=np.float64), int(label)) for f, label in zip(X, y)]


def knn_oracle(samples, x, k):
    """Full sort of (distance, insertion index); plurality with smallest-class
    tie-break.  Integer-valued features keep every comparison exact."""
    dists = []
    for i, s in enumerate(samples):
        d = sum((float(a) - float(b)) ** 2 for a, b in zip(s.features, x))
        dists.append((d, i))
    dists.sort(key=lambda t: (t[0], t[1]))
    votes = {}
    for d, i in dists[:k]:
        votes[samples[i].label] = votes.get(samples[i].label, 0) + 1
    return min(votes, key=lambda c: (-votes[c], c))


class TestKnn:
    def test_stores_all_prototypes_verbatim(self):
        rng = np.random.default_rng(41)
        X = rng.integers(0, 5, size=(10, 4)).astype(np.float64)
        y = rng.integers(0, 3, size=10)
        model = knn_train(make_samples(X, y), k=1)
        assert model.features.shape == (10, 4)
        assert np.array_equal(model.features, X)
        assert np.array_equal(model.labels, y)

    def test_k_out_of_range_rejected(self):
        samples = make_samples(np.zeros((10, 2)), range(10))
        with pytest.raises(ConfigError):
            knn_train(samples, k=11)
        with pytest.raises(ConfigError):
            knn_train(samples, k=0)

    def test_duplicates_stored_twice(self):
        s = make_samples([[1.0, 2.0]] * 2, [5, 5])
        model = knn_train(s, k=2)
        assert model.features.shape == (2, 2)

    def test_query_equal_to_prototype_wins_at_k1(self):
        X = [[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]]
        model = knn_train(make_samples(X, [7, 3, 1]), k=1)
        for x, want in zip(X, [7, 3, 1]):
            label, votes = knn_predict(model, x)
            assert label == want
            assert votes == {want: 1}

    def test_fixed_plurality(self):
        model = knn_train(make_samples([[0.0], [1.0], [2.0]], [4, 4, 9]), k=3)
        label, votes = knn_predict(model, [100.0])
        assert label == 4
        assert votes == {4: 2, 9: 1}

    def test_dimension_mismatch_rejected(self):
        model = knn_train(make_samples([[0.0, 1.0], [1.0, 0.0]], [0, 1]), k=1)
        with pytest.raises(ValueError, match="dimension mismatch"):
            knn_predict(model, [1.0, 2.0, 3.0])

    def test_distance_tie_prefers_earlier_prototype(self):
        # both prototypes at distance 1 from the query; insertion order decides
        model = knn_train(make_samples([[1.0], [3.0]], [8, 2]), k=1)
        label, _ = knn_predict(model, [2.0])
        assert label == 8

    def test_vote_tie_prefers_smallest_class(self):
        model = knn_train(make_samples([[0.0], [10.0]], [9, 4]), k=2)
        label, votes = knn_predict(model, [5.0])
        assert votes == {9: 1, 4: 1}
        assert label == 4

    @pytest.mark.parametrize("k", [1, 3, 5])
    def test_matches_full_sort_oracle(self, k):
        rng = np.random.default_rng(42)
        X = rng.integers(0, 8, size=(60, 5)).astype(np.float64)
        y = rng.integers(0, 10, size=60)
        samples = make_samples(X, y)
        model = knn_train(samples, k=k)
        for _ in range(50):
            q = rng.integers(0, 8, size=5).astype(np.float64)
            label, _ = knn_predict(model, q)
            assert label == knn_oracle(samples, q, k)

    def test_normalization_recorded_and_applied(self):
        # same direction, different magnitude: normalized KNN sees them as equal
        model = knn_train(make_samples([[1.0, 0.0], [0.0, 1.0]], [0, 1]), k=1, normalize=True)
        assert model.normalize
        label, _ = knn_predict(model, [50.0, 0.0])
        assert label == 0


class TestLinear:
    def test_normal_equation_residual(self):
        rng = np.random.default_rng(43)
        X = rng.normal(size=(40, 6))
        y = rng.integers(0, 4, size=40)
        ridge = 1e-3
        model = linear_train(make_samples(X, y), ridge=ridge)
        A = np.hstack([X, np.ones((40, 1))])
        G = A.T @ A + ridge * np.eye(7)
        for j, c in enumerate(model.classes):
            t = np.where(y == c, 1.0, -1.0)
            resid = np.linalg.norm(G @ model.weights[j] - A.T @ t)
            assert resid <= 1e-8

    def test_two_point_boundary_crosses_half(self):
        model = linear_train(make_samples([[0.0], [1.0]], [0, 1]), ridge=0.0)
        _, scores = linear_predict(model, [0.5])
        assert abs(scores[0] - scores[1]) < 1e-6

    def test_separable_blobs_train_accuracy(self):
        rng = np.random.default_rng(44)
        centers = np.array([[0.0, 0.0], [50.0, 0.0], [0.0, 50.0], [50.0, 50.0]])
        X = []
        y = []
        for c, center in enumerate(centers):
            pts = center + rng.normal(scale=0.5, size=(25, 2))
            X.extend(pts)
            y.extend([c] * 25)
        samples = make_samples(X, y)
        model = linear_train(samples, ridge=1e-3)
        correct = sum(linear_predict(model, s.features)[0] == s.label for s in samples)
        assert correct == len(samples)

    def test_singular_system_with_zero_ridge(self):
        # a constant zero feature column makes A'A exactly singular
        X = [[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]]
        with pytest.raises(ValueError, match="ill-conditioned; increase ridge"):
            linear_train(make_samples(X, [0, 0, 1, 1]), ridge=0.0)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="2 classes"):
            linear_train(make_samples([[0.0], [1.0]], [3, 3]))

    def test_all_zero_weights_pick_smallest_class(self):
        model = LinearModel(
            weights=np.zeros((3, 4)), classes=np.array([2, 5, 7], dtype=np.int64)
        )
        label, scores = linear_predict(model, [1.0, 1.0, 1.0])
        assert label == 2
        assert scores == {2: 0.0, 5: 0.0, 7: 0.0}

    def test_positive_scaling_keeps_argmax_with_zero_bias(self):
        rng = np.random.default_rng(45)
        W = rng.normal(size=(4, 6))
        W[:, -1] = 0.0
        model = LinearModel(weights=W, classes=np.arange(4, dtype=np.int64))
        for _ in range(30):
            x = rng.normal(size=5)
            base, _ = linear_predict(model, x)
            for scale in (0.5, 2.0, 77.0):
                assert linear_predict(model, scale * x)[0] == base

    def test_argmax_matches_dot_product_loop(self):
        rng = np.random.default_rng(46)
        W = rng.normal(size=(5, 8))
        classes = np.array([0, 2, 4, 6, 8], dtype=np.int64)
        model = LinearModel(weights=W, classes=classes)
        for _ in range(50):
            x = rng.normal(size=7)
            label, scores = linear_predict(model, x)
            naive = {}
            for j, c in enumerate(classes):
                naive[int(c)] = sum(W[j, i] * v for i, v in enumerate(x)) + W[j, -1]
            want = min(naive, key=lambda c: (-naive[c], c))
            assert label == want
            for c in naive:
                assert abs(scores[c] - naive[c]) < 1e-9

    def test_adding_constant_row_keeps_argmax(self):
        rng = np.random.default_rng(47)
        W = rng.normal(size=(4, 5))
        shift = rng.normal(size=5)
        m1 = LinearModel(weights=W, classes=np.arange(4, dtype=np.int64))
        m2 = LinearModel(weights=W + shift, classes=np.arange(4, dtype=np.int64))
        for _ in range(30):
            x = rng.normal(size=4)
            assert linear_predict(m1, x)[0] == linear_predict(m2, x)[0]

    def test_training_is_deterministic(self):
        rng = np.random.default_rng(48)
        X = rng.normal(size=(30, 5))
        y = rng.integers(0, 3, size=30)
        a = linear_train(make_samples(X, y), ridge=1e-3)
        b = linear_train(make_samples(X, y), ridge=1e-3)
        assert a.weights.tobytes() == b.weights.tobytes()


class TestNormalize:
    def test_unit_norm(self):
        v = l2_normalize(np.array([3.0, 4.0]))
        assert np.allclose(v, [0.6, 0.8])

    def test_zero_vector_passes_through(self):
        assert np.array_equal(l2_normalize(np.zeros(4)), np.zeros(4))

    def test_vector_and_matrix_paths_agree_bitwise(self):
        rng = np.random.default_rng(49)
        X = rng.normal(size=(10, 7))
        M = l2_normalize(X)
        for i in range(10):
            assert l2_normalize(X[i]).tobytes() == M[i].tobytes()


class TestPersistence:
    def test_knn_round_trip_bit_exact(self):
        rng = np.random.default_rng(50)
        X = rng.normal(size=(12, 6))
        y = rng.integers(0, 10, size=12)
        model = knn_train(make_samples(X, y), k=3, normalize=True)
        blob = dump_model_bytes(model, "dcc")
        loaded, tag = load_model_bytes(blob)
        assert tag == "dcc"
        assert isinstance(loaded, KnnModel)
        assert loaded.k == 3 and loaded.normalize
        assert loaded.features.tobytes() == model.features.tobytes()
        assert np.array_equal(loaded.labels, model.labels)
        assert dump_model_bytes(loaded, "dcc") == blob

    def test_linear_round_trip_bit_exact(self):
        rng = np.random.default_rng(51)
        X = rng.normal(size=(20, 4))
        y = rng.integers(0, 5, size=20)
        model = linear_train(make_samples(X, y), ridge=1e-2)
        blob = dump_model_bytes(model, "rlc")
        loaded, tag = load_model_bytes(blob)
        assert tag == "rlc"
        assert isinstance(loaded, LinearModel)
        assert loaded.weights.tobytes() == model.weights.tobytes()
        assert np.array_equal(loaded.classes, model.classes)
        assert dump_model_bytes(loaded, "rlc") == blob

    def test_bad_magic_rejected(self):
        model = knn_train(make_samples([[0.0], [1.0]], [0, 1]), k=1)
        blob = bytearray(dump_model_bytes(model))
        blob[0] ^= 0xFF
        with pytest.raises(ValueError, match="unexpected magic"):
            load_model_bytes(bytes(blob))

    def test_truncation_rejected(self):
        model = knn_train(make_samples([[0.0], [1.0]], [0, 1]), k=1)
        blob = dump_model_bytes(model)
        with pytest.raises(ValueError, match="truncated"):
            load_model_bytes(blob[: len(blob) - 5])

    def test_save_load_file(self, tmp_path):
        from numrec.classifiers import load_model, save_model

        model = knn_train(make_samples([[0.0, 1.0], [1.0, 0.0]], [0, 1]), k=1)
        path = tmp_path / "model.bin"
        save_model(model, path, "raw")
        loaded, tag = load_model(path)
        assert tag == "raw"
        assert np.array_equal(loaded.features, model.features)
