import pytest

from needlegauge import Gateway, GatewayConfig, PropertySpec, Schema, ScriptedBackend


@pytest.fixture
def toy_schema():
    return Schema(
        name="toy",
        types={
            "Person": (PropertySpec("name"), PropertySpec("role", required=False)),
            "Event": (PropertySpec("name"), PropertySpec("keywords", required=False)),
            "Product": (PropertySpec("name"), PropertySpec("keywords", required=False)),
        },
    )


@pytest.fixture
def gateway_factory():
    def build(replies, **cfg_kwargs):
        return Gateway(ScriptedBackend(list(replies)), GatewayConfig(**cfg_kwargs))

    return build
