import math
from types import SimpleNamespace

import numpy as np
from django.test import SimpleTestCase

from spectral.exceptions import (
    AllGroupsDroppedError, EmptySeriesError, PreconditionError, UnknownGroupVariableError, ZeroVarianceError,
)
from spectral.services.dataset import SurveyDataset
from spectral.services.decompose import (
    group_decompose, trace_concentration, trace_concentration_change, trace_concentration_counterfactuals,
    within_between_counterfactuals,
)
from spectral.services.symmat import diag, identity, make_sym
from spectral.tests.helpers import complete_dataset

SQUARE = [(1, 1), (1, -1), (-1, 1), (-1, -1)]


def grouped(points_by_group, group_var="party"):
    values, labels = [], []
    for label, points in points_by_group.items():
        values.extend(points)
        labels.extend([label] * len(points))
    return complete_dataset(values, groups={group_var: labels})


def fuzz_dataset(rng):
    n = int(rng.integers(20, 201))
    p = int(rng.integers(1, 7))
    groups = int(rng.integers(1, 5))
    missing = float(rng.uniform(0.0, 0.3))
    values = rng.choice(np.linspace(-1.0, 1.0, int(rng.integers(2, 8))), size=(n, p))
    labels = rng.integers(0, groups, size=n)
    # desplazamientos por grupo para que Σ_b no sea trivial
    values = np.clip(values + 0.3 * (labels[:, None] - groups / 2.0), -1.0, 1.0)
    values[rng.random((n, p)) < missing] = np.nan
    group_labels = np.array([f"g{x}" for x in labels], dtype=object)
    group_labels[rng.random(n) < 0.05] = None
    return SurveyDataset(
        questions=[f"q{j}" for j in range(p)],
        values=values,
        weights=rng.uniform(0.2, 3.0, size=n),
        years=np.zeros(n, dtype=int),
        groups={"g": group_labels},
    )


class TraceConcentrationTests(SimpleTestCase):
    def test_examples(self):
        tr, conc, rho = trace_concentration(diag([2, 1]))
        self.assertEqual((tr, rho), (3.0, 2.0))
        self.assertAlmostEqual(conc, 2.0 / 3.0)
        tr, conc, rho = trace_concentration(make_sym([[2 / 3, 2 / 3], [2 / 3, 2 / 3]]))
        self.assertAlmostEqual(tr, 4.0 / 3.0)
        self.assertAlmostEqual(conc, 1.0)
        self.assertAlmostEqual(rho, 4.0 / 3.0)
        tr, conc, rho = trace_concentration(identity(3))
        self.assertEqual((tr, rho), (3.0, 1.0))
        self.assertAlmostEqual(conc, 1.0 / 3.0)

    def test_zero_trace(self):
        with self.assertRaises(ZeroVarianceError):
            trace_concentration(diag([0, 0]))

    def test_change_multiplies(self):
        change = trace_concentration_change(diag([2, 1]), diag([3, 1]))
        self.assertAlmostEqual(change.ratio_observed, 1.5)
        self.assertAlmostEqual(change.ratio_variance_only, 4.0 / 3.0)
        self.assertAlmostEqual(change.ratio_concentration_only, 9.0 / 8.0)
        self.assertAlmostEqual(change.ratio_variance_only * change.ratio_concentration_only, change.ratio_observed,
                               delta=1e-9)

    def test_change_identity_and_scaling(self):
        sigma = make_sym([[2, 0.5], [0.5, 1]])
        same = trace_concentration_change(sigma, sigma)
        self.assertEqual((same.ratio_observed, same.ratio_variance_only, same.ratio_concentration_only), (1.0, 1.0, 1.0))
        scaled = trace_concentration_change(sigma, sigma.scaled(2.0))
        self.assertAlmostEqual(scaled.ratio_observed, 2.0, places=12)
        self.assertAlmostEqual(scaled.ratio_variance_only, 2.0, places=12)
        self.assertAlmostEqual(scaled.ratio_concentration_only, 1.0, places=12)


class GroupDecomposeTests(SimpleTestCase):
    def test_separated_means_with_identity_covariances(self):
        data = grouped({
            "dem": [(1 + x, y) for x, y in SQUARE],
            "rep": [(-1 + x, y) for x, y in SQUARE],
        })
        d = group_decompose(data, "party", min_cell=2)
        self.assertEqual(d.group_labels, ["dem", "rep"])
        self.assertEqual(d.shares, [0.5, 0.5])
        np.testing.assert_allclose(d.sigma_within.entries, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(d.sigma_between.entries, np.diag([1.0, 0.0]), atol=1e-12)
        np.testing.assert_allclose(d.pooled_sigma.entries, np.diag([2.0, 1.0]), atol=1e-12)
        self.assertAlmostEqual(d.rho_within, 1.0, delta=1e-12)
        self.assertAlmostEqual(d.rho_between, 1.0, delta=1e-12)
        self.assertAlmostEqual(d.slack_b, 0.0, delta=1e-12)
        self.assertAlmostEqual(d.slack_w, 0.0, delta=1e-12)
        self.assertEqual(d.means, [[1.0, 0.0], [-1.0, 0.0]])
        self.assertEqual(d.group_rho, [1.0, 1.0])

    def test_identical_groups_have_no_between_component(self):
        points = [(1, 0.5), (-1, 0), (0.5, 1), (0, -1)]
        d = group_decompose(grouped({"a": points, "b": points}), "party")
        np.testing.assert_allclose(d.sigma_between.entries, 0.0, atol=1e-15)
        self.assertAlmostEqual(d.rho_between, 0.0, delta=1e-12)
        self.assertAlmostEqual(d.slack_w, 0.0, delta=1e-12)
        self.assertAlmostEqual(d.slack_b, 0.0, delta=1e-12)

    def test_negative_between_component(self):
        a, b = math.sqrt(3.0), math.sqrt(0.1)
        data = grouped({
            "g1": [(a * x, b * y) for x, y in SQUARE],
            "g2": [(b * x, a * y) for x, y in SQUARE],
        })
        d = group_decompose(data, "party")
        np.testing.assert_allclose(d.sigma_within.entries, np.diag([1.55, 1.55]), atol=1e-12)
        self.assertAlmostEqual(d.pooled_rho, 1.55, delta=1e-9)
        self.assertAlmostEqual(d.rho_within, 3.0, delta=1e-9)
        self.assertAlmostEqual(d.rho_between, -1.45, delta=1e-9)
        self.assertAlmostEqual(d.slack_w, 1.45, delta=1e-9)
        self.assertAlmostEqual(d.slack_b, 0.0, delta=1e-9)

    def test_collinear_rank_one_groups_have_no_slack(self):
        t = 0.5
        data = grouped({
            "a": [(1 + t, 1 + t), (1 - t, 1 - t)],
            "b": [(-1 + t, -1 + t), (-1 - t, -1 - t)],
        })
        d = group_decompose(data, "party")
        self.assertAlmostEqual(d.slack_b, 0.0, delta=1e-6)
        self.assertAlmostEqual(d.slack_w, 0.0, delta=1e-6)

    def test_small_and_absent_groups_are_dropped(self):
        data = complete_dataset(
            [[1, 0], [-1, 1], [0, 0], [1, 1], [0, -1], [1, -1]],
            weights=[1, 1, 1, 1, 2, 4],
            groups={"party": ["a", "a", "b", "b", "c", None]},
        )
        d = group_decompose(data, "party", min_cell=2)
        self.assertEqual(d.group_labels, ["a", "b"])
        self.assertEqual(d.dropped_groups, ["c"])
        self.assertAlmostEqual(d.dropped_weight_share, 0.6)
        self.assertAlmostEqual(sum(d.shares), 1.0)
        np.testing.assert_allclose(
            (d.sigma_within + d.sigma_between).entries, d.pooled_sigma.entries, atol=1e-12,
        )
        self.assertNotAlmostEqual(d.pooled_rho, d.pooled_rho_all_rows)

    def test_errors(self):
        data = grouped({"a": [(1, 0)], "b": [(0, 1)]})
        with self.assertRaises(AllGroupsDroppedError):
            group_decompose(data, "party", min_cell=2)
        with self.assertRaises(UnknownGroupVariableError):
            group_decompose(data, "sex")

    def test_fuzzed_identities(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            data = fuzz_dataset(rng)
            d = group_decompose(data, "g", min_cell=2)
            np.testing.assert_allclose(
                (d.sigma_within + d.sigma_between).entries, d.pooled_sigma.entries, atol=1e-9,
            )
            self.assertGreaterEqual(d.slack_b, -1e-9)
            self.assertGreaterEqual(d.slack_w, -1e-9)
            self.assertAlmostEqual(d.rho_within + d.rho_between, d.pooled_rho, delta=1e-9)
            self.assertAlmostEqual(sum(d.shares), 1.0, delta=1e-12)


class CounterfactualTests(SimpleTestCase):
    @staticmethod
    def series(pairs):
        return [
            (f"{1990 + 5 * i}-{1995 + 5 * i}",
             SimpleNamespace(rho_within=w, rho_between=b, pooled_rho=w + b, group_var="party"))
            for i, (w, b) in enumerate(pairs)
        ]

    def test_single_bin(self):
        s = within_between_counterfactuals(self.series([(1.0, 0.5)]))
        self.assertEqual(s.within_only, s.observed)
        self.assertEqual(s.between_only, s.observed)

    def test_change_attributed_between(self):
        s = within_between_counterfactuals(self.series([(1, 1), (1, 2)]))
        self.assertEqual(s.between_only, [2, 3])
        self.assertEqual(s.within_only, [2, 2])
        self.assertEqual(s.baseline, "1990-1995")
        self.assertEqual(s.group_var, "party")

    def test_change_attributed_within(self):
        s = within_between_counterfactuals(self.series([(1, 1), (2, 1)]))
        self.assertEqual(s.between_only, [2, 2])
        self.assertEqual(s.within_only, [2, 3])

    def test_explicit_baseline(self):
        s = within_between_counterfactuals(self.series([(1, 1), (2, 1)]), baseline="1995-2000")
        self.assertEqual(s.baseline, "1995-2000")
        self.assertEqual(s.within_only, [2, 3])
        self.assertEqual(s.between_only, [3, 3])
        with self.assertRaises(PreconditionError):
            within_between_counterfactuals(self.series([(1, 1)]), baseline="2020-2025")

    def test_empty_series(self):
        with self.assertRaises(EmptySeriesError):
            within_between_counterfactuals([])
        with self.assertRaises(EmptySeriesError):
            trace_concentration_counterfactuals([])

    def test_trace_counterfactuals(self):
        s = trace_concentration_counterfactuals([("t0", diag([2, 1])), ("t1", diag([3, 1]))])
        self.assertAlmostEqual(s.variance_only[1], 8.0 / 3.0)
        self.assertAlmostEqual(s.concentration_only[1], 9.0 / 4.0)
        self.assertEqual(s.observed, [2.0, 3.0])

    def test_trace_counterfactuals_constant_and_scaled(self):
        sigma = make_sym([[2, 0.3], [0.3, 1]])
        constant = trace_concentration_counterfactuals([("a", sigma), ("b", sigma), ("c", sigma)])
        for values in (constant.observed, constant.variance_only, constant.concentration_only):
            self.assertEqual(len(set(values)), 1)
        scaled = trace_concentration_counterfactuals([("a", sigma), ("b", sigma.scaled(3.0))])
        rho0 = scaled.observed[0]
        self.assertAlmostEqual(scaled.concentration_only[1], rho0, places=12)
        self.assertAlmostEqual(scaled.variance_only[1], 3.0 * rho0, places=12)

    def test_fuzzed_counterfactual_identities(self):
        rng = np.random.default_rng(32)
        for _ in range(100):
            bins = int(rng.integers(1, 6))
            pairs = [(float(rng.uniform(0.1, 3)), float(rng.uniform(-1, 2))) for _ in range(bins)]
            s = within_between_counterfactuals(self.series(pairs))
            for t in range(bins):
                self.assertAlmostEqual(
                    (s.within_only[t] - s.observed[0]) + (s.between_only[t] - s.observed[0]),
                    s.observed[t] - s.observed[0], delta=1e-9,
                )
            sigmas = []
            for _ in range(bins):
                raw = rng.uniform(-1, 1, size=(3, 3))
                sigmas.append(make_sym(raw @ raw.T + 0.1 * np.eye(3), tol=1e-12))
            tc = trace_concentration_counterfactuals([(str(i), m) for i, m in enumerate(sigmas)])
            for t in range(bins):
                self.assertAlmostEqual(
                    (tc.variance_only[t] / tc.observed[0]) * (tc.concentration_only[t] / tc.observed[0]),
                    tc.observed[t] / tc.observed[0], delta=1e-9,
                )
