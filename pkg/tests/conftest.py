import random

import pytest

from energynet.bee import Bee, BeeKind, Carrier, MacAddress


def mac(n: int) -> MacAddress:
    return MacAddress(bytes([0x02, 0, 0, 0, n >> 8, n & 0xFF]))


def make_bee(**overrides) -> Bee:
    fields = dict(
        kind=BeeKind.SETTLE,
        carrier=Carrier.ELECTRICITY,
        quantity_wh=1000,
        delivery_start=1_700_000_000,
        delivery_duration_min=120,
        price_mcny_per_kwh=500,
        sender=mac(1),
        receiver=mac(2),
    )
    fields.update(overrides)
    return Bee(**fields)


def random_bee(rng: random.Random) -> Bee:
    kind = rng.choice(list(BeeKind))
    carrier = rng.choice(list(Carrier))
    return Bee(
        kind=kind,
        carrier=carrier,
        quantity_wh=rng.randint(0 if kind is BeeKind.CONFIRM else 1, 2**32 - 1),
        delivery_start=rng.randint(0, 2**32 - 1),
        delivery_duration_min=rng.randint(1, 2**16 - 1),
        price_mcny_per_kwh=rng.randint(0, 2**32 - 1),
        carbon_intensity_g_per_kwh=rng.randint(0, 2**16 - 1),
        green_fraction_bp=rng.randint(0, 10000),
        grade=rng.randint(0, 2**16 - 1),
        mass_flow_rate=0 if carrier is Carrier.ELECTRICITY else rng.randint(0, 2**16 - 1),
        sender=mac(rng.randint(1, 400)),
        receiver=mac(rng.randint(401, 800)),
    )


@pytest.fixture
def rng():
    return random.Random(0xBEE5)
