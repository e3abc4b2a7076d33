# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Tests for retrieval evaluation against brute force definitions of CMC
and average precision, plus hand computed rankings.
"""

import unittest

import numpy as np

from .. import exceptions as fed_exc
from .._data_io import ClientSpec, generate_synthetic
from .._eval import RetrievalSet, cmc, evaluate, evaluate_model, map_score
from .._nets import Backbone


def _brute_force(query, gallery, ks):
    '''CMC hits per rank and the average precision of every evaluated query.'''
    hits = np.zeros(len(ks))
    aps = []
    for q in range(len(query.identities)):
        qf = query.features[q] / np.linalg.norm(query.features[q])
        sims = [float(np.dot(qf, g / np.linalg.norm(g))) for g in gallery.features]
        ranking = sorted(range(len(sims)), key=lambda g: (-sims[g], g))
        if query.camera_ids is not None:
            ranking = [g for g in ranking
                       if not (gallery.identities[g] == query.identities[q]
                               and gallery.camera_ids[g] == query.camera_ids[q])]
        relevant = [rank for rank, g in enumerate(ranking, 1)
                    if gallery.identities[g] == query.identities[q]]
        if not relevant:
            continue
        for idx, k in enumerate(ks):
            if relevant[0] <= k:
                hits[idx] += 1
        aps.append(sum((count / float(rank)) for count, rank in enumerate(relevant, 1)) / len(relevant))
    return hits, aps


class TestRetrieval(unittest.TestCase):

    def _hand_gallery(self, identities):
        features = np.array([[1.0, 0.0], [0.8, 0.6], [0.6, 0.8]])
        return RetrievalSet(features, np.array(identities))

    def test_average_precision_two_hits(self):
        query = RetrievalSet(np.array([[1.0, 0.0]]), np.array([7]))
        self.assertAlmostEqual(map_score(query, self._hand_gallery([7, 8, 7])), (1.0 + 2.0 / 3.0) / 2.0,
                               places=15)

    def test_average_precision_second_rank(self):
        query = RetrievalSet(np.array([[1.0, 0.0]]), np.array([7]))
        self.assertEqual(map_score(query, self._hand_gallery([8, 7, 9])), 0.5)

    def test_cmc_hand_case(self):
        query = RetrievalSet(np.array([[1.0, 0.0]]), np.array([7]))
        gallery = self._hand_gallery([8, 9, 7])
        self.assertEqual(cmc(query, gallery, [1, 2, 3]).tolist(), [0.0, 0.0, 1.0])

    def test_self_retrieval(self):
        rng = np.random.default_rng(0)
        features = rng.normal(size=(10, 4))
        rset = RetrievalSet(features, np.arange(10))
        self.assertEqual(cmc(rset, rset, [1]).tolist(), [1.0])
        self.assertEqual(map_score(rset, rset), 1.0)

    def test_no_match(self):
        query = RetrievalSet(np.ones((2, 2)), np.array([1, 2]))
        gallery = RetrievalSet(np.ones((2, 2)), np.array([3, 4]))
        with self.assertRaises(fed_exc.NoEvaluableQuery):
            cmc(query, gallery, [1])
        with self.assertRaises(fed_exc.NoEvaluableQuery):
            map_score(query, gallery)

    def test_empty(self):
        with self.assertRaises(fed_exc.EmptyInput):
            cmc(RetrievalSet(np.zeros((0, 2)), np.array([])), RetrievalSet(np.ones((1, 2)), np.array([1])), [1])
        with self.assertRaises(fed_exc.EmptyInput):
            map_score(RetrievalSet(np.ones((1, 2)), np.array([1])), RetrievalSet(np.zeros((0, 2)), np.array([])))

    def test_dimension_mismatch(self):
        with self.assertRaises(fed_exc.ShapeMismatch):
            cmc(RetrievalSet(np.ones((1, 2)), np.array([1])), RetrievalSet(np.ones((1, 3)), np.array([1])), [1])

    def test_same_camera_excluded(self):
        query = RetrievalSet(np.array([[1.0, 0.0]]), np.array([1]), np.array([0]))
        gallery = RetrievalSet(np.array([[1.0, 0.0], [0.6, 0.8], [0.0, 1.0]]),
                               np.array([1, 2, 1]), np.array([0, 1, 1]))
        self.assertEqual(cmc(query, gallery, [1, 2]).tolist(), [0.0, 1.0])
        self.assertEqual(map_score(query, gallery), 0.5)

    def test_queries_without_match_skipped(self):
        query = RetrievalSet(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1, 5]))
        gallery = RetrievalSet(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1, 2]))
        self.assertEqual(cmc(query, gallery, [1]).tolist(), [1.0])

    def test_rank_k_nondecreasing(self):
        rng = np.random.default_rng(1)
        query = RetrievalSet(rng.normal(size=(15, 3)), rng.integers(0, 4, size=15))
        gallery = RetrievalSet(rng.normal(size=(20, 3)), rng.integers(0, 4, size=20))
        scores = cmc(query, gallery, range(1, 21))
        self.assertTrue(np.all(np.diff(scores) >= 0))
        self.assertEqual(scores[-1], 1.0)

    def test_gallery_permutation(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            query = RetrievalSet(rng.normal(size=(8, 3)), rng.integers(0, 3, size=8))
            ids = rng.integers(0, 3, size=12)
            ids[:3] = [0, 1, 2]
            gallery = RetrievalSet(rng.normal(size=(12, 3)), ids)
            perm = rng.permutation(12)
            shuffled = RetrievalSet(gallery.features[perm], gallery.identities[perm])
            self.assertTrue(np.allclose(cmc(query, gallery, [1, 5]), cmc(query, shuffled, [1, 5]),
                                        rtol=0, atol=1e-12))
            self.assertAlmostEqual(map_score(query, gallery), map_score(query, shuffled), places=12)

    def test_against_brute_force(self):
        rng = np.random.default_rng(3)
        ks = [1, 5, 10]
        for instance in range(100):
            num_ids = int(rng.integers(1, 6))
            cameras = instance % 2 == 0
            q = int(rng.integers(1, 21))
            g = int(rng.integers(1, 21))
            query = RetrievalSet(rng.normal(size=(q, 4)), rng.integers(0, num_ids, size=q),
                                 rng.integers(0, 3, size=q) if cameras else None)
            gallery = RetrievalSet(rng.normal(size=(g, 4)), rng.integers(0, num_ids, size=g),
                                   rng.integers(0, 3, size=g) if cameras else None)
            hits, aps = _brute_force(query, gallery, ks)
            if not aps:
                with self.assertRaises(fed_exc.NoEvaluableQuery):
                    evaluate(query, gallery)
                continue
            expected = hits / len(aps)
            self.assertTrue(np.allclose(cmc(query, gallery, ks), expected, rtol=0, atol=1e-12))
            self.assertAlmostEqual(map_score(query, gallery), float(np.mean(aps)), places=12)
            scores = evaluate(query, gallery)
            self.assertEqual([scores.rank1, scores.rank5, scores.rank10], list(cmc(query, gallery, ks)))
            self.assertEqual(scores.mAP, map_score(query, gallery))


class TestEvaluateModel(unittest.TestCase):

    def test_clean_clients_are_retrieved(self):
        client = generate_synthetic([ClientSpec(40, 5, input_dim=6, noise=0.0, seed=3)])[0]
        scores = evaluate_model(Backbone.identity(6), client)
        self.assertEqual(scores.rank1, 1.0)
        self.assertEqual(scores.mAP, 1.0)

    def test_scores_in_range(self):
        client = generate_synthetic([ClientSpec(40, 5, input_dim=6, noise=0.3, seed=4)])[0]
        scores = evaluate_model(Backbone.create(6, 3, seed=1), client)
        for value in scores:
            self.assertTrue(0.0 <= value <= 1.0)
        self.assertLessEqual(scores.rank1, scores.rank5)
        self.assertLessEqual(scores.rank5, scores.rank10)


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
