import itertools
import math

import numpy as np
import pytest

from optsort_core import OptsortError, SolveStatus
from optsort_solver import MilpModel, Sense, SolveLimits, check_solution, solve, write_lp


def test_mochila_de_uma_restricao():
    m = MilpModel("mochila")
    x1, x2 = m.add_binary("x1"), m.add_binary("x2")
    m.add_constraint({x1: 1, x2: 1}, "<=", 1)
    m.set_objective({x1: 1, x2: 1}, Sense.MAX)
    s = solve(m)
    assert s.status == SolveStatus.OPTIMAL
    assert s.objective == pytest.approx(1.0)
    assert check_solution(m, s.values) == []


def test_mochila_com_pesos():
    m = MilpModel("mochila")
    x = [m.add_binary(f"x{i}") for i in range(3)]
    m.add_constraint({x[0]: 2, x[1]: 3, x[2]: 1}, "<=", 5)
    m.set_objective({x[0]: 5, x[1]: 4, x[2]: 3})
    s = solve(m)
    assert s.objective == pytest.approx(9.0)
    assert np.round(s.values).tolist() == [1, 1, 0]


def test_limites_contraditorios_sao_inviaveis():
    m = MilpModel("contraditorio")
    x = m.add_var("x", 0, 10, integer=True)
    m.add_constraint({x: 1}, ">=", 2)
    m.add_constraint({x: 1}, "<=", 1)
    m.set_objective({x: 1})
    s = solve(m)
    assert s.status == SolveStatus.INFEASIBLE
    assert not s.has_incumbent
    with pytest.raises(OptsortError):
        s.value(0)


def test_variavel_com_limites_invertidos():
    m = MilpModel()
    with pytest.raises(ValueError):
        m.add_var("x", 2, 1)


def test_minimizacao_com_igualdade():
    m = MilpModel("cobertura", Sense.MIN)
    x = m.add_var("x", 0, 10, integer=True)
    y = m.add_var("y", 0, 10, integer=True)
    m.add_constraint({x: 2, y: 3}, "==", 12)
    m.set_objective({x: 1, y: 1})
    s = solve(m)
    assert s.status == SolveStatus.OPTIMAL
    assert s.objective == pytest.approx(4.0)
    assert s.value(y) == pytest.approx(4.0)


def test_modelo_sem_variaveis():
    s = solve(MilpModel("vazio"))
    assert s.status == SolveStatus.OPTIMAL
    assert s.objective == 0.0


def test_solucao_inicial_provada_otima_na_raiz():
    # Objetivo inteiro: a relaxação vale 1,5 e o limitante arredondado iguala a solução inicial
    m = MilpModel("raiz")
    x = [m.add_binary(f"x{i}") for i in range(3)]
    m.add_constraint({v: 2 for v in x}, "<=", 3)
    m.set_objective({v: 1 for v in x})
    s = solve(m, SolveLimits(node_limit=1), warm_start=[1, 0, 0])
    assert s.status == SolveStatus.OPTIMAL
    assert s.objective == pytest.approx(1.0)
    assert s.nodes == 1


def test_solucao_inicial_inviavel_e_descartada():
    m = MilpModel("descarte")
    x = [m.add_binary(f"x{i}") for i in range(2)]
    m.add_constraint({x[0]: 1, x[1]: 1}, "<=", 1)
    m.set_objective({x[0]: 2, x[1]: 1})
    s = solve(m, warm_start=[1, 1])
    assert s.status == SolveStatus.OPTIMAL
    assert s.objective == pytest.approx(2.0)


def test_limite_de_nos_sem_incumbente():
    m = MilpModel("limite")
    x = [m.add_binary(f"x{i}") for i in range(3)]
    m.add_constraint({v: 2 for v in x}, "<=", 3)
    m.set_objective({x[0]: 3, x[1]: 2, x[2]: 2})
    s = solve(m, SolveLimits(node_limit=1))
    assert s.status == SolveStatus.LIMIT_REACHED
    assert not s.has_incumbent
    assert s.bound == pytest.approx(4.0)


def _mochila_com_gap():
    # Relaxação da raiz vale 14,67 (limitante 14); a primeira incumbente vale 13 no quarto nó
    m = MilpModel("gap")
    x = [m.add_binary(f"x{i}") for i in range(3)]
    m.add_constraint({x[0]: 4, x[1]: 3, x[2]: 3}, "<=", 6)
    m.set_objective({x[0]: 10, x[1]: 7, x[2]: 6})
    return m


def test_gap_relativo_encerra_a_busca():
    s = solve(_mochila_com_gap(), SolveLimits(mip_gap=0.1))
    assert s.status == SolveStatus.FEASIBLE
    assert s.objective == pytest.approx(13.0)
    assert s.bound == pytest.approx(14.0)
    assert s.gap == pytest.approx(1 / 13)
    assert s.nodes == 4


@pytest.mark.parametrize("gap", [0.0, 0.05])
def test_gap_abaixo_do_atual_prova_otimalidade(gap):
    s = solve(_mochila_com_gap(), SolveLimits(mip_gap=gap))
    assert s.status == SolveStatus.OPTIMAL
    assert s.objective == pytest.approx(13.0)
    assert s.nodes == 7


def test_backend_desconhecido():
    m = MilpModel()
    m.add_binary("x")
    with pytest.raises(OptsortError):
        solve(m, SolveLimits(backend="cplex"))


def _forca_bruta(A, b, c):
    melhor = -math.inf
    for x in itertools.product((0, 1), repeat=len(c)):
        if np.all(A @ np.array(x) <= b):
            melhor = max(melhor, float(np.dot(c, x)))
    return melhor


@pytest.mark.parametrize("backend", ["embedded", "highs"])
def test_equivale_a_enumeracao(backend):
    rng = np.random.default_rng(11)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        linhas = int(rng.integers(1, 4))
        A = rng.integers(0, 5, size=(linhas, n))
        b = rng.integers(0, 8, size=linhas)
        c = rng.integers(-2, 6, size=n)
        m = MilpModel("aleatorio")
        x = [m.add_binary(f"x{i}") for i in range(n)]
        for i in range(linhas):
            m.add_constraint({x[j]: int(A[i, j]) for j in range(n)}, "<=", int(b[i]))
        m.set_objective({x[j]: int(c[j]) for j in range(n)})
        s = solve(m, SolveLimits(backend=backend))
        assert s.status == SolveStatus.OPTIMAL
        assert s.objective == pytest.approx(_forca_bruta(A, b, c))
        assert check_solution(m, s.values) == []


def test_verificador_aponta_violacoes():
    m = MilpModel()
    x = m.add_binary("x")
    y = m.add_var("y", 0, 5)
    m.add_range({x: 1, y: 1}, 1, 3, "faixa")
    assert check_solution(m, [0.5, 0]) != []
    assert any("faixa" in v for v in check_solution(m, [1, 4]))
    assert check_solution(m, [1, 2]) == []
    assert check_solution(m, [1]) == ["vetor com 1 valores para 2 variáveis"]


def test_exportacao_lp(tmp_path):
    m = MilpModel("exporta")
    x = m.add_binary("X[1,1]")
    y = m.add_var("Y[1,1]", 0, 7, integer=True)
    m.add_range({x: 1}, 1, 2, "casamentos")
    m.add_constraint({y: 1, x: -7}, "<=", 0, "ligacao")
    m.set_objective({y: 1})
    caminho = tmp_path / "modelo.lp"
    write_lp(m, caminho)
    texto = caminho.read_text(encoding="utf-8")
    assert texto.startswith("\\ Modelo exporta\nMaximize\n")
    assert " casamentos_hi: + 1 X_1_1_ <= 2" in texto
    assert " casamentos_lo: + 1 X_1_1_ >= 1" in texto
    assert " ligacao: + 1 Y_1_1_ - 7 X_1_1_ <= 0" in texto
    assert "General\n Y_1_1_\n" in texto
    assert "Binary\n X_1_1_\n" in texto
    assert texto.endswith("End\n")
