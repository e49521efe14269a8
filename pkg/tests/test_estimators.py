import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rmhsbm.estimation import summarize
from rmhsbm.estimators import GroupLLRTransformer, MotifStructureTest
from rmhsbm.hierarchy import build_parameter_groups, bundled_spec
from rmhsbm.sampling import Seed, corrupt_parameters, draw_model_parameters, sample_population

SPEC = bundled_spec("bnu1_desk")
GROUPS = build_parameter_groups(SPEC)


def _pop(corrupt=0, graphs=False):
    model = draw_model_parameters(GROUPS, seed=3, block_sizes=SPEC.block_sizes)
    model = corrupt_parameters(model, GROUPS, corrupt, seed=3)
    return sample_population(model, 4, Seed(3), summaries_only=not graphs)


def test_transformer_shape_and_values():
    pop = _pop()
    X = GroupLLRTransformer("bnu1_desk").fit_transform(pop)
    assert X.shape == (4, 29)
    assert (X >= 0).all()
    assert np.allclose(X[:, ~GROUPS.testable], 0)


def test_transformer_accepts_graphs():
    graphs = _pop(graphs=True)
    X = GroupLLRTransformer().fit(graphs).transform(graphs)
    Y = GroupLLRTransformer().fit(None).transform([summarize(g, 14) for g in graphs])
    assert np.array_equal(X, Y)


def test_transformer_requires_fit():
    with pytest.raises(NotFittedError):
        GroupLLRTransformer().transform(_pop())


def test_structure_test_fit():
    est = MotifStructureTest("bnu1_desk", method="wilks-aggregated").fit(_pop(corrupt=40))
    assert est.n_graphs_ == 4
    assert est.global_.decision == "reject"
    assert est.bic_.preferred == "SBM"
    assert est.rejection_matrix_.shape == (14, 14)
    clean = MotifStructureTest().fit(_pop())
    assert clean.bic_.preferred == "RMHSBM"


def test_structure_test_params_and_clone():
    est = MotifStructureTest(method="anova", alpha=0.1)
    assert est.get_params()["alpha"] == 0.1
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(ValueError):
        MotifStructureTest(method="nope").fit(_pop())
    with pytest.raises(ValueError):
        MotifStructureTest(alpha=0).fit(_pop())
    with pytest.raises(TypeError):
        MotifStructureTest().fit([1, 2])
    with pytest.raises(ValueError):
        MotifStructureTest("three_motif").fit(_pop())
