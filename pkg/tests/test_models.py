import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.core.errors import ConfigError, ShapeMismatchError
from src.models import BatchNorm, Dense, ModelGraph, ReLU, WeightMode, build_model, build_resnet, build_resnet18
from src.schemas.model_schema import Architecture, ModelSpec
from src.schemas.policy_schema import PolicyKind, QuantPolicy


class TestBuilders:
    def test_lenet_layout(self, make_lenet):
        model = make_lenet()
        assert [layer.name for layer in model.quantizable_layers()] == ["conv1", "conv2", "fc1", "fc2"]
        assert model.layer("fc1").weight.shape == (2 * 4 * 2 * 2, 16)
        assert model.layer("fc2").bias is not None
        assert not hasattr(model.layer("conv1"), "bias")

    def test_lenet_logits_shape(self, make_lenet, small_splits):
        logits = make_lenet().predict(small_splits.test.images[:5])
        assert logits.shape == (5, 10)

    @pytest.mark.parametrize("depth", [20, 32])
    def test_cifar_resnet_layer_count(self, depth):
        model = build_resnet(depth, width=4)
        assert len(model.quantizable_layers()) == depth
        assert model.name == f"resnet{depth}"

    def test_cifar_resnet_forward(self, rng):
        model = build_resnet(20, in_channels=3, num_classes=7, width=4)
        logits = model.predict(rng.normal(size=(2, 3, 8, 8)).astype(np.float32))
        assert logits.shape == (2, 7)

    def test_cifar_resnet_rejects_depth(self):
        with pytest.raises(ConfigError):
            build_resnet(18)

    def test_resnet18_projections(self, rng):
        model = build_resnet18(width=4)
        names = [layer.name for layer in model.quantizable_layers()]
        assert len(names) == 21
        assert sum(name.endswith(".proj") for name in names) == 3
        assert model.predict(rng.normal(size=(2, 3, 8, 8)).astype(np.float32)).shape == (2, 10)

    def test_same_seed_same_weights(self):
        a, b = build_resnet(20, width=4, seed=5), build_resnet(20, width=4, seed=5)
        for (name, x), (_, y) in zip(a.state_dict().items(), b.state_dict().items()):
            assert_array_equal(x, y, err_msg=name)

    def test_build_from_spec(self):
        spec = ModelSpec(arch="lenet", width=4).resolved((1, 8, 8), 3)
        model = build_model(spec)
        assert model.layer("conv1").weight.shape == (4, 1, 3, 3)
        assert model.layer("fc2").weight.shape == (16, 3)

    def test_explicit_geometry_wins(self):
        spec = ModelSpec(arch="resnet20", num_classes=5).resolved((3, 32, 32), 10)
        assert spec.num_classes == 5
        assert spec.in_channels == 3
        assert Architecture(spec.arch) == Architecture.RESNET20

    def test_unresolved_geometry(self):
        with pytest.raises(ConfigError):
            build_model(ModelSpec(arch="lenet"))


class TestGraph:
    def test_duplicate_names(self):
        with pytest.raises(ConfigError, match="relu"):
            ModelGraph("dup", [ReLU("relu"), ReLU("relu")])

    def test_following_batchnorm(self, make_lenet):
        model = make_lenet()
        assert model.following_batchnorm("conv1").name == "bn1"
        assert model.following_batchnorm("fc2") is None
        with pytest.raises(KeyError):
            model.following_batchnorm("missing")

    def test_following_batchnorm_inside_blocks(self):
        model = build_resnet18(width=4)
        assert isinstance(model.following_batchnorm("stage2.block0.conv2"), BatchNorm)
        assert model.following_batchnorm("stage2.block0.proj").name == "stage2.block0.proj_bn"

    def test_policy_on_unquantizable_layer(self, make_lenet):
        with pytest.raises(ConfigError):
            make_lenet().set_policy("bn1", QuantPolicy.tern(0.05))

    def test_policies(self, make_lenet):
        model = make_lenet()
        model.set_policy("conv2", QuantPolicy.rel([0.05, 0.1]))
        policies = model.policies()
        assert policies["conv1"].kind == PolicyKind.FP
        assert policies["conv2"].betas == [0.05, 0.1]

    def test_state_dict_round_trip(self, make_lenet, small_splits):
        source, target = make_lenet(seed=1), make_lenet(seed=2)
        source.layer("bn1").running_mean[...] = 0.5
        target.load_state_dict(source.state_dict())
        images = small_splits.test.images[:8]
        assert_array_equal(target.predict(images), source.predict(images))

    def test_state_dict_is_a_copy(self, make_lenet):
        model = make_lenet()
        state = model.state_dict()
        state["conv1.weight"][...] = 0.0
        assert model.layer("conv1").weight.data.any()

    def test_load_shape_mismatch_names_layer(self, make_lenet):
        state = make_lenet(num_classes=3).state_dict()
        with pytest.raises(ShapeMismatchError, match="fc2"):
            make_lenet(num_classes=10).load_state_dict(state)

    def test_load_strict_missing_keys(self, make_lenet):
        state = make_lenet().state_dict()
        del state["bn2.gamma"]
        with pytest.raises(ConfigError, match="bn2.gamma"):
            make_lenet().load_state_dict(state)
        make_lenet().load_state_dict(state, strict=False)

    def test_failed_load_leaves_model_untouched(self, make_lenet):
        model = make_lenet()
        before = model.state_dict()
        state = make_lenet(seed=9, num_classes=3).state_dict()
        with pytest.raises(ShapeMismatchError):
            model.load_state_dict(state, strict=False)
        for name, value in model.state_dict().items():
            assert_array_equal(value, before[name], err_msg=name)

    def test_trace_shapes(self, make_lenet):
        model = make_lenet()
        shapes = model.trace_shapes((2, 1, 8, 8))
        assert shapes["conv1"] == ((2, 1, 8, 8), (2, 4, 8, 8))
        assert shapes["pool2"] == ((2, 8, 4, 4), (2, 8, 2, 2))
        assert shapes["fc2"] == ((2, 16), (2, 10))
        assert "forward" not in vars(model.layer("conv1"))

    def test_ternary_predictions_differ_from_fp(self, make_lenet, small_splits):
        model = make_lenet()
        for layer in model.quantizable_layers():
            model.set_policy(layer.name, QuantPolicy.tern(0.05))
        images = small_splits.test.images[:4]
        fp, tern = model.predict(images, WeightMode.FP), model.predict(images, WeightMode.TERNARY)
        assert fp.shape == tern.shape
        assert not np.array_equal(fp, tern)

    def test_fp_policy_ignores_weight_mode(self, make_lenet, small_splits):
        model = make_lenet()
        images = small_splits.test.images[:4]
        assert_array_equal(model.predict(images, WeightMode.FP), model.predict(images, WeightMode.TERNARY))

    def test_dense_flattens_input(self, rng):
        model = ModelGraph("mlp", [Dense("fc", 12, 2, bias=True)])
        assert model.predict(rng.normal(size=(3, 3, 2, 2)).astype(np.float32)).shape == (3, 2)
