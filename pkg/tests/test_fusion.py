import itertools

import numpy as np
import pytest

from numrec.classifiers import LabeledSample, LinearModel, knn_train
from numrec.config import VOTER_TAGS, ConfigError, RunConfig
from numrec.data_io import generate_synthetic
from numrec.fusion import (
    FusionEnsemble,
    dump_ensemble_bytes,
    extract_features,
    fuse_predict,
    load_ensemble_bytes,
    majority_vote,
    train_ensemble,
)
from numrec.imaging import binarize_auto


def binarized_corpus(seed=5, count=2, jitter=True):
    ds = generate_synthetic(seed, count, jitter=jitter)
    return [(binarize_auto(img), label) for img, label in ds.samples]


class TestMajorityVote:
    def test_unanimity(self):
        assert majority_vote([3, 3, 3, 3]).label == 3

    def test_two_two_tie_goes_to_first_priority_voter(self):
        result = majority_vote([1, 1, 7, 7])
        assert result.label == 1
        assert result.tie_break
        assert result.deciding_voter == 0

    def test_plurality_of_present_votes(self):
        result = majority_vote([0, 4, 4, 9])
        assert result.label == 4
        assert not result.tie_break

    def test_priority_permutation_changes_only_ties(self):
        swapped = [2, 3, 0, 1]  # rlc voters first
        for votes in itertools.product(range(4), repeat=4):
            default = majority_vote(votes)
            other = majority_vote(votes, swapped)
            if not default.tie_break:
                assert default.label == other.label

    def test_exhaustive_enumeration_properties(self):
        # every quadruple over 10 classes: strict majority always wins, the
        # result is always one of the votes, ties return the highest-priority
        # tied voter's vote
        for votes in itertools.product(range(10), repeat=4):
            result = majority_vote(votes)
            counts = {c: votes.count(c) for c in set(votes)}
            top = max(counts.values())
            if top >= 3:
                assert not result.tie_break
                assert counts[result.label] == top
            assert result.label in votes
            assert counts[result.label] == top
            if result.tie_break:
                tied = {c for c, n in counts.items() if n == top}
                first_tied = next(i for i, v in enumerate(votes) if v in tied)
                assert result.label == votes[first_tied]
                assert result.deciding_voter == first_tied

    def test_empty_votes_rejected(self):
        with pytest.raises(ConfigError):
            majority_vote([])


class TestTrainEnsemble:
    def test_trains_four_voters_with_consistent_dims(self):
        ens = train_ensemble(binarized_corpus(), RunConfig())
        assert tuple(tag for tag, _ in ens.voters) == VOTER_TAGS
        assert ens.model("dcc_knn").dim == 800
        assert ens.model("dcc_lc").dim == 800
        assert ens.model("rlc_knn").dim == 18
        assert ens.model("rlc_lc").dim == 18

    def test_compact_grid_dims(self):
        ens = train_ensemble(binarized_corpus(), RunConfig(dcc_grid="3x3"))
        assert ens.model("dcc_knn").dim == 72

    def test_missing_class_rejected(self):
        corpus = [s for s in binarized_corpus() if s[1] != 7]
        with pytest.raises(ValueError, match="class with zero samples"):
            train_ensemble(corpus, RunConfig())

    def test_deterministic_persisted_form(self):
        a = dump_ensemble_bytes(train_ensemble(binarized_corpus(), RunConfig()))
        b = dump_ensemble_bytes(train_ensemble(binarized_corpus(), RunConfig()))
        assert a == b

    def test_duplicated_dataset_same_k1_knn_predictions(self):
        corpus = binarized_corpus(seed=6, count=2)
        doubled = [s for s in corpus for _ in range(2)]
        cfg = RunConfig(knn_k=1)
        single = train_ensemble(corpus, cfg)
        double = train_ensemble(doubled, cfg)
        probes = binarized_corpus(seed=99, count=1)
        for img, _ in probes:
            assert fuse_predict(single, img).votes[0] == fuse_predict(double, img).votes[0]
            assert fuse_predict(single, img).votes[2] == fuse_predict(double, img).votes[2]


class TestFusePredict:
    def test_training_sample_is_unanimous_with_k1(self):
        corpus = binarized_corpus(seed=7, count=3, jitter=False)
        ens = train_ensemble(corpus, RunConfig(knn_k=1))
        for img, label in corpus[:10]:
            pred = fuse_predict(ens, img)
            assert pred.label == label
            assert pred.votes == (label, label, label, label)
            assert not pred.tie_break

    def test_result_is_always_one_of_the_votes(self):
        ens = train_ensemble(binarized_corpus(seed=8, count=3), RunConfig())
        for img, _ in binarized_corpus(seed=9, count=1):
            pred = fuse_predict(ens, img)
            assert pred.label in pred.votes

    def test_empty_glyph_propagates(self):
        ens = train_ensemble(binarized_corpus(), RunConfig())
        with pytest.raises(ValueError, match="empty glyph"):
            fuse_predict(ens, np.zeros((20, 20), dtype=np.uint8))

    def test_crafted_two_two_tie(self):
        # voters built by hand: the dcc pair says 3, the rlc pair says 5
        cfg = RunConfig(knn_k=1)
        probe = binarized_corpus(seed=10, count=1)[0][0]
        feats = extract_features(probe, cfg)

        def linear_favoring(dim, label):
            # bias-only scorer: constant scores, argmax fixed at `label`
            classes = np.arange(10, dtype=np.int64)
            W = np.zeros((10, dim + 1))
            W[label, -1] = 1.0
            return LinearModel(weights=W, classes=classes)

        voters = (
            ("dcc_knn", knn_train([LabeledSample(feats["dcc"], 3)], k=1, normalize=True)),
            ("dcc_lc", linear_favoring(800, 3)),
            ("rlc_knn", knn_train([LabeledSample(feats["rlc"], 5)], k=1)),
            ("rlc_lc", linear_favoring(18, 5)),
        )
        ens = FusionEnsemble(voters=voters, config=cfg)
        pred = fuse_predict(ens, probe)
        assert pred.votes == (3, 3, 5, 5)
        assert pred.label == 3
        assert pred.tie_break
        assert pred.deciding_voter == "dcc_knn"

    def test_dimension_mismatch_rejected_at_construction(self):
        cfg = RunConfig()
        ens = train_ensemble(binarized_corpus(), cfg)
        wrong = dict(ens.voters)["rlc_knn"]
        bad_voters = tuple(
            (tag, wrong if tag == "dcc_knn" else model) for tag, model in ens.voters
        )
        with pytest.raises(ConfigError, match="dimension"):
            FusionEnsemble(voters=bad_voters, config=cfg)


class TestEnsemblePersistence:
    def test_round_trip_bit_exact_and_same_predictions(self):
        ens = train_ensemble(binarized_corpus(seed=11, count=2), RunConfig())
        blob = dump_ensemble_bytes(ens)
        loaded = load_ensemble_bytes(blob)
        assert dump_ensemble_bytes(loaded) == blob
        assert loaded.config == ens.config
        for img, _ in binarized_corpus(seed=12, count=1):
            assert fuse_predict(loaded, img) == fuse_predict(ens, img)

    def test_bad_magic_rejected(self):
        blob = bytearray(dump_ensemble_bytes(train_ensemble(binarized_corpus(), RunConfig())))
        blob[3] ^= 0x01
        with pytest.raises(ValueError, match="unexpected magic"):
            load_ensemble_bytes(bytes(blob))

    def test_truncation_rejected(self):
        blob = dump_ensemble_bytes(train_ensemble(binarized_corpus(), RunConfig()))
        with pytest.raises(ValueError, match="truncated"):
            load_ensemble_bytes(blob[:-10])
