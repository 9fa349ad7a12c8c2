from src.core.errors import ConfigError
from src.models.graph import ModelGraph
from src.models.lenet import build_lenet
from src.models.resnet import build_resnet, build_resnet18
from src.schemas.model_schema import Architecture, ModelSpec

DEFAULT_WIDTH = {
    Architecture.LENET: 16,
    Architecture.RESNET18: 64,
}


def build_model(spec: ModelSpec) -> ModelGraph:
    if None in (spec.in_channels, spec.image_size, spec.num_classes):
        raise ConfigError("model input geometry is unresolved; call ModelSpec.resolved first")
    arch = Architecture(spec.arch)
    width = spec.width or DEFAULT_WIDTH.get(arch, 16)
    if arch == Architecture.LENET:
        return build_lenet(spec.in_channels, spec.image_size, spec.num_classes, width, seed=spec.seed)
    if arch == Architecture.RESNET18:
        return build_resnet18(spec.in_channels, spec.num_classes, width, seed=spec.seed)
    depth = int(arch.value.removeprefix("resnet"))
    return build_resnet(depth, spec.in_channels, spec.num_classes, width, seed=spec.seed)
