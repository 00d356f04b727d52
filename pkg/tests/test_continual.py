import json
import os
import struct

import numpy as np
import pytest

from src.continual import (
    EvalReport, ExpertRegistry, add_class, chunk_tasks, deserialize_registry, evaluate,
    evaluate_incremental, fit_prototypes, load_registry, parse_task_partition, predict,
    predict_batch, predict_multi_head, predict_prototype, save_registry, score_matrix,
    serialize_expert, serialize_registry,
)
from src.exceptions import (
    ConfigError, ConflictError, DataFileError, DimensionError, EmptyDatasetError, FormatError,
    LabelError, RegistryStateError, UnknownClassError,
)
from src.flowcore import CouplingBlock, InvertibleNet, SubNet, init_net, log_likelihood, zero_net
from src.models import ActivationKind, EvalMode, LabeledVectors
from src.numkit import Rng
from src.optim import TrainConfig, train_class

from .conftest import make_clusters


def random_registry(n_classes=5, dim=4, rank=3, seed=0, swap_halves=False) -> ExpertRegistry:
    reg = ExpertRegistry()
    for c in range(n_classes):
        net, _ = init_net(dim, rank, 2, ActivationKind.TANH, Rng(seed + c), swap_halves=swap_halves)
        reg = add_class(reg, c, net.freeze())
    return reg


def trained_registry(ds: LabeledVectors, epochs: int = 60) -> ExpertRegistry:
    cfg = TrainConfig(learning_rate=0.05, epochs=epochs, batch_size=8, patience=5, rank=4)
    reg = ExpertRegistry()
    for c in ds.classes:
        reg = add_class(reg, c, train_class(ds.of_class(c).vectors, cfg, Rng(c)))
    return reg


@pytest.fixture(scope="module")
def cluster_registry():
    return trained_registry(make_clusters(n_classes=3, dim=4))


class TestExpertRegistry:

    def test_add_class_returns_new_registry(self):
        empty = ExpertRegistry()
        net = zero_net(4, 2)
        reg = add_class(empty, 3, net)
        assert len(empty) == 0
        assert reg.class_ids == [3]
        assert reg.get(3) is net
        assert reg.dim == 4

    def test_existing_experts_are_shared_not_copied(self):
        reg = random_registry(2)
        bigger = add_class(reg, 7, zero_net(4, 3))
        assert bigger.get(0) is reg.get(0)
        assert bigger.class_ids == [0, 1, 7]

    def test_duplicate_class(self):
        reg = add_class(ExpertRegistry(), 0, zero_net(4, 2))
        with pytest.raises(ConflictError):
            add_class(reg, 0, zero_net(4, 2))

    def test_dimension_mismatch(self):
        reg = add_class(ExpertRegistry(), 0, zero_net(4, 2))
        with pytest.raises(DimensionError):
            add_class(reg, 1, zero_net(6, 2))

    def test_negative_class_id(self):
        with pytest.raises(DimensionError):
            add_class(ExpertRegistry(), -1, zero_net(4, 2))

    def test_unknown_class(self):
        with pytest.raises(UnknownClassError):
            ExpertRegistry().get(5)

    def test_mnist_parameter_budget(self):
        reg = ExpertRegistry()
        for c in range(10):
            reg = add_class(reg, c, zero_net(784, 16, 2))
        assert reg.param_count() == 518080
        assert set(reg.param_counts().values()) == {51808}

    def test_subset_keeps_learning_order(self):
        reg = ExpertRegistry()
        for c in [4, 1, 3]:
            reg = add_class(reg, c, zero_net(4, 2))
        assert reg.subset([3, 4]).class_ids == [4, 3]
        with pytest.raises(UnknownClassError):
            reg.subset([9])

    def test_threaded_scores_match(self, gen):
        reg = random_registry(4)
        X = gen.standard_normal((20, 4))
        ids1, s1 = reg.scores(X, threads=1)
        ids4, s4 = reg.scores(X, threads=4)
        assert ids1 == ids4
        np.testing.assert_array_equal(s1, s4)


class TestInference:

    def test_single_class_always_predicted(self, gen):
        reg = add_class(ExpertRegistry(), 6, init_net(4, 2, 2, ActivationKind.RELU, Rng(1))[0])
        for x in gen.standard_normal((10, 4)):
            assert predict(reg, x).class_id == 6

    def test_scores_cover_every_class(self, gen):
        reg = random_registry(5)
        prediction = predict(reg, gen.standard_normal(4))
        assert sorted(prediction.per_class_scores) == [0, 1, 2, 3, 4]
        assert prediction.score == min(prediction.per_class_scores.values())

    def test_argmin_norm_equals_argmax_likelihood(self):
        reg = random_registry(5)
        X = np.random.default_rng(5).standard_normal((1000, 4)) * 2
        disagreements = 0
        for x in X:
            by_likelihood = max(reg.class_ids, key=lambda c: log_likelihood(reg.get(c), x))
            if predict(reg, x).class_id != by_likelihood:
                disagreements += 1
        assert disagreements == 0

    def test_tie_goes_to_smallest_class_id(self):
        reg = ExpertRegistry()
        for c in [5, 2, 9]:
            reg = add_class(reg, c, zero_net(4, 2))
        assert predict(reg, np.ones(4)).class_id == 2

    def test_empty_registry(self):
        with pytest.raises(RegistryStateError):
            predict(ExpertRegistry(), np.zeros(4))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            predict(random_registry(2), np.zeros(6))

    def test_multi_head_restricts_candidates(self, gen):
        reg = random_registry(5)
        x = gen.standard_normal(4)
        assert predict_multi_head(reg, x, [3]).class_id == 3
        best = predict_multi_head(reg, x, [1, 4])
        assert best.class_id in (1, 4)
        assert sorted(best.per_class_scores) == [1, 4]

    def test_multi_head_errors(self):
        reg = random_registry(2)
        with pytest.raises(ConfigError):
            predict_multi_head(reg, np.zeros(4), [])
        with pytest.raises(UnknownClassError):
            predict_multi_head(reg, np.zeros(4), [0, 8])

    def test_batch_matches_single(self, gen):
        reg = random_registry(3)
        X = gen.standard_normal((15, 4))
        assert predict_batch(reg, X) == [predict(reg, x).class_id for x in X]

    def test_score_matrix_threads_agree(self, gen):
        reg = random_registry(3)
        X = gen.standard_normal((15, 4))
        ids, scores = score_matrix(reg, X)
        assert ids == sorted(ids)
        assert scores.shape == (15, 3)
        np.testing.assert_array_equal(score_matrix(reg, X, threads=3)[1], scores)
        np.testing.assert_allclose(score_matrix(reg, X[0])[1], scores[:1], rtol=1e-12)

    def test_net_mapping_input_to_origin_wins(self):
        def constant(value):
            return SubNet(A=[[0.0]], a=[0.0], B=[[0.0]], b=[value],
                          activation=ActivationKind.IDENTITY)

        net_a = InvertibleNet((CouplingBlock(constant(-1.5), constant(2.0)),))
        reg = add_class(add_class(ExpertRegistry(), 0, zero_net(2, 1)), 1, net_a)
        pred = predict(reg, np.array([1.5, -2.0]))
        assert pred.class_id == 1
        assert pred.score == 0.0
        assert pred.per_class_scores[0] == pytest.approx(6.25)

    def test_learning_order_does_not_change_predictions(self, gen):
        nets = {c: init_net(4, 3, 2, ActivationKind.TANH, Rng(50 + c))[0].freeze() for c in range(4)}
        forward, backward = ExpertRegistry(), ExpertRegistry()
        for c in [0, 1, 2, 3]:
            forward = add_class(forward, c, nets[c])
        for c in [3, 1, 0, 2]:
            backward = add_class(backward, c, nets[c])
        X = gen.standard_normal((20, 4))
        assert predict_batch(forward, X) == predict_batch(backward, X)
        np.testing.assert_array_equal(score_matrix(forward, X)[1], score_matrix(backward, X)[1])


class TestFrozenPast:

    def test_earlier_experts_unchanged_by_new_classes(self):
        ds = make_clusters(n_classes=4, dim=4)
        cfg = TrainConfig(learning_rate=0.01, epochs=5, batch_size=16, rank=4)
        reg = ExpertRegistry()
        snapshots = {}
        for c in ds.classes:
            reg = add_class(reg, c, train_class(ds.of_class(c).vectors, cfg, Rng(c)))
            snapshots[c] = serialize_expert(c, reg.get(c))
            for earlier, expected in snapshots.items():
                assert serialize_expert(earlier, reg.get(earlier)) == expected

    def test_registry_file_prefix_is_stable(self, tmp_path):
        reg = random_registry(2)
        path = str(tmp_path / "reg.ovainn")
        save_registry(reg, path)
        before = open(path, "rb").read()
        save_registry(add_class(reg, 2, zero_net(4, 3)), path)
        after = open(path, "rb").read()
        # only the net count in the header changes
        assert after[18:len(before)] == before[18:]


class TestPrototype:

    def test_separable_clusters_are_perfect(self):
        train = make_clusters(n_classes=10, dim=10, seed=1)
        test = make_clusters(n_classes=10, dim=10, seed=2)
        model = fit_prototypes({c: train.of_class(c).vectors for c in train.classes})
        report = evaluate(model, test, baseline="prototype")
        assert report.final_accuracy == 1.0
        assert report.baseline == "prototype"

    def test_prototype_is_class_mean(self, clusters):
        model = fit_prototypes({c: clusters.of_class(c).vectors for c in clusters.classes})
        np.testing.assert_allclose(model.prototypes[1], clusters.of_class(1).vectors.mean(axis=0))

    def test_order_independent(self, clusters):
        forward = fit_prototypes({c: clusters.of_class(c).vectors for c in [0, 1, 2]})
        backward = fit_prototypes({c: clusters.of_class(c).vectors for c in [2, 1, 0]})
        for c in range(3):
            np.testing.assert_array_equal(forward.prototypes[c], backward.prototypes[c])
        x = clusters.vectors[0]
        assert predict_prototype(forward, x) == predict_prototype(backward, x)

    def test_empty_class(self):
        with pytest.raises(EmptyDatasetError):
            fit_prototypes({0: np.zeros((0, 4))})

    def test_empty_model(self):
        with pytest.raises(RegistryStateError):
            predict_prototype(fit_prototypes({}), np.zeros(4))


class TestTaskPartition:

    def test_ranges_and_lists(self):
        assert parse_task_partition("0-4;5-9") == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]
        assert parse_task_partition("3,1; 2") == [[3, 1], [2]]
        assert parse_task_partition("0,1|2,3") == [[0, 1], [2, 3]]

    def test_task_size_chunks_class_order(self):
        assert parse_task_partition("2", class_order=[4, 3, 2, 1, 0]) == [[4, 3], [2, 1], [0]]
        assert chunk_tasks([0, 1, 2], 1) == [[0], [1], [2]]

    @pytest.mark.parametrize("text", ["", "0-2;2-3", "a,b", "1;x"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_task_partition(text)


class TestEvaluate:

    def test_trained_registry_separates_clusters(self, cluster_registry):
        test = make_clusters(n_classes=3, dim=4, seed=9)
        report = evaluate(cluster_registry, test)
        assert report.final_accuracy == 1.0
        assert report.n_samples == len(test)
        np.testing.assert_array_equal(np.diag(report.confusion_matrix), [30, 30, 30])

    def test_confusion_rows_are_true_labels(self):
        reg = ExpertRegistry()
        for c in [0, 1]:
            reg = add_class(reg, c, zero_net(2, 1))
        test = LabeledVectors(dim=2, vectors=np.ones((3, 2)), labels=[0, 1, 1])
        report = evaluate(reg, test)
        # ties -> class 0 for every sample
        np.testing.assert_array_equal(report.confusion_matrix, [[1, 0], [2, 0]])
        assert report.final_accuracy == pytest.approx(1 / 3)
        assert report.per_class_accuracy == {0: 1.0, 1: 0.0}

    def test_unregistered_label(self):
        test = LabeledVectors(dim=4, vectors=np.zeros((1, 4)), labels=[7])
        with pytest.raises(LabelError):
            evaluate(random_registry(2), test)

    def test_empty_test_set(self):
        with pytest.raises(EmptyDatasetError):
            evaluate(random_registry(2), LabeledVectors(dim=4, vectors=np.zeros((0, 4)), labels=[]))

    def test_multi_head_needs_partition(self, clusters):
        with pytest.raises(ConfigError):
            evaluate(random_registry(3), clusters, mode=EvalMode.MULTI_HEAD)

    def test_multi_head_dominates_single_head(self):
        ds = make_clusters(n_classes=4, dim=4, spread=2.5, scale=2.0, seed=3)
        model = fit_prototypes({c: ds.of_class(c).vectors for c in ds.classes})
        single = evaluate(model, ds)
        multi = evaluate(model, ds, mode=EvalMode.MULTI_HEAD, task_partition=[[0, 1], [2, 3]])
        assert single.final_accuracy < 1.0
        assert multi.sample_accuracy >= single.final_accuracy
        assert len(multi.per_task_accuracy) == 2

    def test_singleton_tasks_are_perfect(self):
        reg = random_registry(3)
        ds = make_clusters(n_classes=3, dim=4)
        report = evaluate(reg, ds, mode=EvalMode.MULTI_HEAD, task_partition=[[0], [1], [2]])
        assert report.final_accuracy == 1.0
        assert report.mean_task_accuracy == 1.0

    def test_multi_head_score_is_mean_over_tasks(self):
        reg = ExpertRegistry()
        for c in [0, 1, 2]:
            reg = add_class(reg, c, zero_net(2, 1))
        # identity experts tie everywhere, so each task predicts its smallest id
        test = LabeledVectors(dim=2, vectors=np.ones((5, 2)), labels=[0, 1, 1, 1, 2])
        report = evaluate(reg, test, mode=EvalMode.MULTI_HEAD, task_partition=[[0, 1], [2]])
        assert report.per_task_accuracy == [0.25, 1.0]
        assert report.final_accuracy == pytest.approx(0.625)
        assert report.sample_accuracy == pytest.approx(0.4)
        curve = evaluate_incremental(reg, test, [[0, 1, 2]], EvalMode.MULTI_HEAD, [[0, 1], [2]])
        assert curve.accuracy_after_each_batch == [(3, pytest.approx(0.625))]

    def test_incremental_curve(self, cluster_registry):
        test = make_clusters(n_classes=3, dim=4, seed=9)
        report = evaluate_incremental(cluster_registry, test, [[0], [1], [2]])
        assert [seen for seen, _ in report.accuracy_after_each_batch] == [1, 2, 3]
        assert report.accuracy_after_each_batch[0][1] == 1.0

    def test_report_outputs(self, cluster_registry, tmp_path):
        test = make_clusters(n_classes=3, dim=4, seed=9)
        report = evaluate_incremental(cluster_registry, test, [[0, 1], [2]])
        data = json.loads(report.to_json())
        assert data["mode"] == "single_head"
        assert data["accuracy_after_each_batch"][-1]["classes_seen"] == 3
        csv_path = report.write_csv(str(tmp_path / "curve.csv"))
        lines = open(csv_path).read().splitlines()
        assert lines[0] == "classes_seen,accuracy"
        assert len(lines) == 3
        assert isinstance(report, EvalReport)


class TestPersistence:

    def test_bytes_round_trip(self):
        reg = random_registry(3, swap_halves=True)
        payload = serialize_registry(reg)
        again = deserialize_registry(payload)
        assert serialize_registry(again) == payload
        assert again.class_ids == reg.class_ids
        assert again.get(0).swap_halves

    def test_weights_stored_as_float32(self):
        reg = random_registry(1)
        loaded = deserialize_registry(serialize_registry(reg))
        for key, value in reg.get(0).parameters().items():
            np.testing.assert_array_equal(loaded.get(0).parameters()[key],
                                          value.astype(np.float32).astype(np.float64))

    def test_loaded_nets_are_frozen(self):
        loaded = deserialize_registry(serialize_registry(random_registry(1)))
        assert not loaded.get(0).blocks[0].f2.b.flags.writeable

    def test_header_layout(self):
        payload = serialize_registry(random_registry(2, dim=6))
        magic, version, count, dim = struct.unpack("<8sHII", payload[:18])
        assert (magic, version, count, dim) == (b"OVAINN01", 1, 2, 6)
        class_id, n_blocks, rank, code = struct.unpack("<IHIB", payload[18:29])
        assert (class_id, n_blocks, rank, code) == (0, 2, 3, 2)

    def test_empty_registry(self):
        payload = serialize_registry(ExpertRegistry())
        assert len(payload) == 18
        assert len(deserialize_registry(payload)) == 0

    def test_bad_magic(self):
        payload = b"NOTINN01" + serialize_registry(random_registry(1))[8:]
        with pytest.raises(FormatError) as info:
            deserialize_registry(payload, "x.ovainn")
        assert info.value.offset == 0
        assert "x.ovainn" in str(info.value)

    def test_bad_version(self):
        payload = bytearray(serialize_registry(random_registry(1)))
        payload[8:10] = struct.pack("<H", 2)
        with pytest.raises(FormatError) as info:
            deserialize_registry(bytes(payload))
        assert info.value.offset == 8

    def test_unknown_activation(self):
        payload = bytearray(serialize_registry(random_registry(1)))
        payload[28] = 9
        with pytest.raises(FormatError) as info:
            deserialize_registry(bytes(payload))
        assert info.value.offset == 28

    def test_truncated(self):
        payload = serialize_registry(random_registry(2))
        with pytest.raises(FormatError):
            deserialize_registry(payload[:-3])

    def test_trailing_bytes(self):
        payload = serialize_registry(random_registry(1))
        with pytest.raises(FormatError) as info:
            deserialize_registry(payload + b"\x00")
        assert info.value.offset == len(payload)

    def test_duplicate_class_in_file(self):
        reg = random_registry(1)
        entry = serialize_expert(0, reg.get(0))
        header = struct.pack("<8sHII", b"OVAINN01", 1, 2, 4)
        with pytest.raises(FormatError):
            deserialize_registry(header + entry + entry)

    def test_save_and_load(self, tmp_path):
        reg = random_registry(2)
        path = str(tmp_path / "models" / "reg.ovainn")
        save_registry(reg, path)
        assert os.listdir(tmp_path / "models") == ["reg.ovainn"]
        assert serialize_registry(load_registry(path)) == serialize_registry(reg)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(DataFileError):
            load_registry(str(tmp_path / "missing.ovainn"))
