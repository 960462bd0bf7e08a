import json

import numpy as np
import pytest

from specprep import exceptions
from specprep._commands import utils
from specprep._commands.utils.transforms import Pipeline, TransformStep

transforms = utils.transforms


def test_log_shift(make_matrix):
    matrix = make_matrix([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    assert np.array_equal(transforms.log_shift(matrix).values, np.log(matrix.values + 1.0))
    assert transforms.log_shift(matrix, a=1.0, base="2").values == pytest.approx(
        np.log2(matrix.values + 1)
    )


@pytest.mark.parametrize("base,expected", [(2, np.log2), (10.0, np.log10), ("e", np.log)])
def test_log_shift_numeric_base(make_matrix, base, expected):
    matrix = make_matrix([[1.0, 3.0]])
    logged = transforms.log_shift(matrix, a=1.0, base=base)
    assert logged.values == pytest.approx(expected(matrix.values + 1.0))


@pytest.mark.parametrize("base", [3, "ten", True])
def test_log_shift_unknown_base(make_matrix, base):
    with pytest.raises(exceptions.TransformError):
        transforms.log_shift(make_matrix([[1.0, 3.0]]), base=base)


def test_log_shift_rejects_non_positive(make_matrix):
    matrix = make_matrix([[1.0, -0.5]])
    with pytest.raises(exceptions.TransformError) as error:
        transforms.log_shift(matrix, a=0.0)
    assert "S1" in error.value.format_message()
    assert "f2" in error.value.format_message()


def test_log_ratio_invariance(positive_matrix):
    weights = np.array([1.0, -2.0, 0.5, 0.25, 0.25])
    factors = np.linspace(0.01, 300.0, positive_matrix.n)
    rescaled = positive_matrix.with_values(positive_matrix.values * factors[:, None])

    scores = transforms.log_shift(positive_matrix, a=0.0).values @ weights
    rescaled_scores = transforms.log_shift(rescaled, a=0.0).values @ weights
    assert np.max(np.abs(scores - rescaled_scores)) < 1e-9


def test_unit_sd_scale(positive_matrix):
    scaled = transforms.unit_sd_scale(positive_matrix)
    assert np.max(np.abs(scaled.values.std(axis=0, ddof=1) - 1)) < 1e-12
    # No centering by default.
    assert (scaled.values > 0).all()


def test_unit_sd_scale_centered(positive_matrix):
    scaled = transforms.unit_sd_scale(positive_matrix, center=True)
    assert np.max(np.abs(scaled.values.mean(axis=0))) < 1e-12


def test_unit_sd_scale_constant_column(make_matrix):
    matrix = make_matrix([[1.0, 2.0], [1.0, 3.0]])
    with pytest.raises(exceptions.TransformError) as error:
        transforms.unit_sd_scale(matrix)
    assert "f1" in error.value.format_message()


def test_pareto_scale(positive_matrix):
    sd = positive_matrix.values.std(axis=0, ddof=1)
    scaled = transforms.pareto_scale(positive_matrix)
    assert np.max(np.abs(scaled.values.std(axis=0, ddof=1) - np.sqrt(sd))) < 1e-10


def test_median_iqr_scale(make_matrix):
    matrix = make_matrix([[1.0], [2.0], [3.0], [4.0], [5.0]])
    scaled = transforms.median_iqr_scale(matrix)
    assert scaled.values[:, 0] == pytest.approx([-1.0, -0.5, 0.0, 0.5, 1.0])


def test_median_iqr_scale_zero_iqr(make_matrix):
    with pytest.raises(exceptions.TransformError):
        transforms.median_iqr_scale(make_matrix([[1.0], [1.0], [1.0]]))


def test_closure(make_matrix):
    matrix = make_matrix([[2.0, 2.0, 2.0], [1.0, 0.0, 3.0]])
    closed = transforms.closure(matrix)
    assert closed.values[0] == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    assert closed.values[1] == pytest.approx([0.25, 0.0, 0.75])


def test_closure_is_idempotent(positive_matrix):
    once = transforms.closure(positive_matrix)
    twice = transforms.closure(once)
    assert np.max(np.abs(once.values - twice.values)) < 1e-12


@pytest.mark.parametrize("row", [[1.0, -1.0, 3.0], [0.0, 0.0, 0.0]])
def test_closure_names_the_sample(make_matrix, row):
    matrix = make_matrix([[1.0, 2.0, 3.0], row])
    with pytest.raises(exceptions.TransformError) as error:
        transforms.closure(matrix)
    assert "S2" in error.value.format_message()


def test_max_peak_per_spectrum(make_matrix):
    scaled = transforms.max_peak(make_matrix([[1.0, 4.0, 2.0]]))
    assert scaled.values[0] == pytest.approx([0.25, 1.0, 0.5])


def test_max_peak_mean_spectrum_location(make_matrix):
    matrix = make_matrix([[1.0, 4.0, 2.0], [2.0, 2.0, 2.0]])
    scaled = transforms.max_peak(matrix, mode="mean_spectrum_location")
    assert scaled.values[0] == pytest.approx([0.25, 1.0, 0.5])
    assert scaled.values[1] == pytest.approx([1.0, 1.0, 1.0])


def test_max_peak_zero_spectrum(make_matrix):
    with pytest.raises(exceptions.TransformError) as error:
        transforms.max_peak(make_matrix([[1.0, 2.0], [0.0, 0.0]]))
    assert "S2" in error.value.format_message()


def test_lag_diff(make_matrix):
    lagged = transforms.lag_diff(make_matrix([[1.0, 3.0, 6.0]], labels=("a", "b", "c")))
    assert np.array_equal(lagged.values, [[2.0, 3.0]])
    assert lagged.feature_labels == ("b-a", "c-b")


def test_lag_diff_single_feature(make_matrix):
    with pytest.raises(exceptions.TransformError):
        transforms.lag_diff(make_matrix([[1.0], [2.0]]))


def test_lag_diff_of_logs_ignores_sample_scaling(positive_matrix):
    factors = np.arange(1, positive_matrix.n + 1, dtype=float) ** 2
    rescaled = positive_matrix.with_values(positive_matrix.values * factors[:, None])

    def lagged_logs(matrix):
        return transforms.lag_diff(transforms.log_shift(matrix, a=0.0)).values

    assert np.max(np.abs(lagged_logs(positive_matrix) - lagged_logs(rescaled))) < 1e-9


def test_quantile(make_matrix):
    normalized = transforms.quantile(make_matrix([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
    assert np.array_equal(normalized.values, [[2.5, 3.5, 4.5], [2.5, 3.5, 4.5]])


def test_quantile_ties_share_the_reference(make_matrix):
    normalized = transforms.quantile(make_matrix([[1.0, 1.0, 2.0], [3.0, 5.0, 7.0]]))
    # Reference is (2, 3, 4.5); the tied pair spans its first two values.
    assert normalized.values[0] == pytest.approx([2.5, 2.5, 4.5])
    assert normalized.values[1] == pytest.approx([2.0, 3.0, 4.5])


def test_quantile_rows_share_a_distribution(positive_matrix):
    normalized = transforms.quantile(positive_matrix).values
    ordered = np.sort(normalized, axis=1)
    assert np.max(np.abs(ordered - ordered[0])) < 1e-12
    assert np.array_equal(
        np.argsort(normalized, axis=1), np.argsort(positive_matrix.values, axis=1)
    )


def test_quantile_single_sample(make_matrix):
    with pytest.raises(exceptions.TransformError):
        transforms.quantile(make_matrix([[1.0, 2.0]]))


def test_rank(make_matrix):
    ranked = transforms.rank(make_matrix([[10.0, 30.0, 20.0, 20.0]]))
    assert np.array_equal(ranked.values, [[1.0, 4.0, 2.5, 2.5]])


def test_binarize(make_matrix):
    matrix = make_matrix([[0.5, 2.0], [1.0, 1.5]])
    assert np.array_equal(transforms.binarize(matrix, [1.0, 1.0]).values, [[0, 1], [0, 1]])
    assert np.array_equal(transforms.binarize(matrix, [-1e300, -1e300]).values, np.ones((2, 2)))


def test_binarize_length_mismatch(make_matrix):
    with pytest.raises(exceptions.TransformError):
        transforms.binarize(make_matrix([[0.5, 2.0]]), [1.0])


def test_transforms_leave_labels_alone(make_matrix):
    matrix = make_matrix([[1.0, 2.0], [3.0, 4.0]], group=("case", "control"), batch=("1", "1"))
    closed = transforms.closure(matrix)
    assert closed.sample_ids == matrix.sample_ids
    assert closed.group == matrix.group
    assert closed.batch == matrix.batch
    assert matrix.values[0, 0] == 1.0


##############
# Pipelines #
##############


def test_pipeline_composes_steps(positive_matrix):
    pipeline = Pipeline.from_records(
        [{"kind": "log_shift", "params": {"a": 1}}, {"kind": "unit_sd_scale"}]
    )
    result, applied = transforms.apply_pipeline(positive_matrix, pipeline)

    expected = transforms.unit_sd_scale(transforms.log_shift(positive_matrix, a=1.0))
    assert np.array_equal(result.values, expected.values)
    assert applied.diagnostics == ()
    assert [entry.kind for entry in applied.audit] == ["log_shift", "unit_sd_scale"]
    assert len(applied.audit[1].fitted["sd"]) == positive_matrix.p


def test_pipeline_ordering_warning(positive_matrix):
    pipeline = Pipeline.from_records([{"kind": "unit_sd_scale"}, {"kind": "log_shift"}])
    _, applied = transforms.apply_pipeline(positive_matrix, pipeline)

    assert len(applied.diagnostics) == 1
    assert "order" in applied.diagnostics[0]
    assert "unit_sd_scale" in applied.diagnostics[0]


def test_empty_pipeline_is_identity(positive_matrix):
    result, applied = transforms.apply_pipeline(positive_matrix, Pipeline())
    assert np.array_equal(result.values, positive_matrix.values)
    assert applied.audit == ()


def test_pipeline_step_error_names_the_step(make_matrix):
    pipeline = Pipeline.from_records([{"kind": "closure"}, {"kind": "lag_diff"}])
    with pytest.raises(exceptions.PipelineStepError) as error:
        transforms.apply_pipeline(make_matrix([[1.0], [2.0]]), pipeline)
    assert error.value.index == 1
    assert error.value.kind == "lag_diff"
    assert isinstance(error.value.cause, exceptions.TransformError)


@pytest.mark.parametrize(
    "records",
    [
        {"kind": "closure"},
        [{"kind": "box_cox"}],
        [{"params": {}}],
        [{"kind": "log_shift", "params": {"b": 1}}],
        [{"kind": "log_shift", "params": {"base": "3"}}],
        [{"kind": "max_peak", "params": {"mode": "tallest"}}],
        [{"kind": "binarize", "params": {"thresholds": []}}],
        [{"kind": "closure", "extra": 1}],
    ],
)
def test_pipeline_rejects_invalid_records(records):
    with pytest.raises(exceptions.ConfigError):
        Pipeline.from_records(records)


def test_pipeline_malformed_json():
    with pytest.raises(exceptions.ConfigError) as error:
        Pipeline.from_json('[{"kind": "closure"', source="pipeline.json")
    assert "line 1" in error.value.format_message()


def test_pipeline_json_round_trip():
    pipeline = Pipeline.from_records(
        [
            {"kind": "log_shift", "params": {"a": 0.5, "base": "10"}},
            {"kind": "binarize", "params": {"thresholds": [1, 2]}},
        ]
    )
    assert Pipeline.from_json(pipeline.to_json()).steps == pipeline.steps
    assert json.loads(pipeline.to_json())[1] == {
        "kind": "binarize",
        "params": {"thresholds": [1.0, 2.0]},
    }


def test_transform_step_params_are_frozen():
    step = TransformStep("log_shift", {"a": 2})
    with pytest.raises(TypeError):
        step.params["a"] = 3  # type: ignore[index]


def test_audit_records(positive_matrix):
    pipeline = Pipeline.from_records([{"kind": "closure"}, {"kind": "lag_diff"}])
    _, applied = transforms.apply_pipeline(positive_matrix, pipeline)
    records = applied.audit_records()

    assert [step["index"] for step in records["steps"]] == [0, 1]
    assert records["steps"][0]["fitted"]["row_sum"] == pytest.approx(
        positive_matrix.values.sum(axis=1)
    )
    assert records["steps"][1]["n_features_out"] == positive_matrix.p - 1
    json.dumps(records)


###########################
# Closure bias experiment #
###########################


def test_closure_bias_three_variables():
    report = transforms.closure_bias_experiment(3, 10000, 20100101)
    assert abs(report.mean_offdiag_before) <= 0.03
    assert -0.55 <= report.mean_offdiag_after <= -0.45
    assert report.corr_after.shape == (3, 3)
    assert np.array_equal(report.corr_after, report.corr_after.T)


def test_closure_bias_two_variables():
    report = transforms.closure_bias_experiment(2, 200, 3)
    assert abs(report.mean_offdiag_after + 1) < 1e-9


def test_closure_bias_ten_variables():
    report = transforms.closure_bias_experiment(10, 50000, 11)
    assert abs(report.mean_offdiag_after + 1 / 9) <= 0.05


def test_closure_bias_is_seeded():
    first = transforms.closure_bias_experiment(4, 500, 99)
    second = transforms.closure_bias_experiment(4, 500, 99)
    assert np.array_equal(first.corr_after, second.corr_after)


@pytest.mark.parametrize("p,n", [(1, 1000), (3, 99)])
def test_closure_bias_preconditions(p, n):
    with pytest.raises(exceptions.ConfigError):
        transforms.closure_bias_experiment(p, n, 0)
