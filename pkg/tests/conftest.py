import numpy as np
import pytest

from construtores import criar_cenario, criar_layout, criar_onda, planejar
from optsort_cenarios import generate_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def layout_simples():
    return criar_layout(k=2, capacity=2, process_time=10.0, n=2)


@pytest.fixture
def cenario_fila():
    """Uma rampa com C=4 e t=10 s; seis encomendas do mesmo destino, 1 s entre elas"""
    layout = criar_layout(k=1, capacity=4, process_time=10.0, n=1)
    onda = criar_onda([0] * 6, [0, 1, 2, 3, 4, 5], length=120.0)
    return criar_cenario(layout, [6], [onda], workers=1)


@pytest.fixture(scope="session")
def cenario_referencia():
    return generate_scenario()


@pytest.fixture(scope="session")
def cenario_restrito():
    return generate_scenario(kind="restricted")


@pytest.fixture(scope="session")
def plano_referencia(cenario_referencia):
    return planejar(cenario_referencia)


@pytest.fixture(scope="session")
def plano_restrito(cenario_restrito):
    return planejar(cenario_restrito)
