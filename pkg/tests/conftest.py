import pytest

from fraceig import DomainSpec, GridFunction, build_domain


def interval_spec(h: float, a: float = 0.0, b: float = 1.0) -> DomainSpec:
    return DomainSpec(dim=1, h=h, shape={"type": "interval", "a": a, "b": b})


def union_spec(h: float) -> DomainSpec:
    return DomainSpec(
        dim=1,
        h=h,
        shape={
            "type": "union",
            "parts": [
                {"type": "interval", "a": 0.0, "b": 1.0},
                {"type": "interval", "a": 2.0, "b": 3.0},
            ],
        },
    )


def box_spec(h: float) -> DomainSpec:
    return DomainSpec(dim=2, h=h, shape={"type": "box", "min": [0.0, 0.0], "max": [1.0, 1.0]})


@pytest.fixture(scope="session")
def interval16():
    return build_domain(interval_spec(1 / 16), t=4.0)


@pytest.fixture(scope="session")
def interval8():
    return build_domain(interval_spec(1 / 8), t=4.0)


@pytest.fixture(scope="session")
def interval64():
    return build_domain(interval_spec(1 / 64), t=4.0)


@pytest.fixture(scope="session")
def union16():
    return build_domain(union_spec(1 / 16), t=4.0)


@pytest.fixture(scope="session")
def box8():
    return build_domain(box_spec(1 / 8), t=4.0)


def random_function(dom, rng) -> GridFunction:
    return GridFunction.from_omega(dom, rng.standard_normal(dom.n_omega))
