import itertools

import networkx as nx
import numpy as np
import pytest

from construtores import criar_layout
from optsort_core import (
    ChuteKind, ConfigError, DemandForecast, InfeasibleError, ObjectiveKind, SolveStatus,
)
from optsort_planner import (
    assign_direct_chutes, audit_plan, build_plan_model, build_problem, check_plan_preconditions,
    heuristic_plan, plan_shift, plan_to_df, plan_to_mapping, solve_plan,
)
from optsort_solver import check_solution


def _problema(totais, layout, T=3600.0, objetivo=ObjectiveKind.PARCELS):
    return build_problem(DemandForecast(tuple(totais), T), layout, objetivo)


def test_contagem_de_variaveis_e_restricoes():
    layout = criar_layout(k=2, n=2, dest_cap=[1, 1], chute_cap=[2, 2])
    modelo = build_plan_model(_problema([3, 4], layout))
    assert modelo.num_vars == 8
    assert sum(v.integer and v.ub == 1 and v.name.startswith("X") for v in modelo.variables) == 4
    assert modelo.num_constraints == 2 + 2 + 2 + 2 + 8


def test_layout_restrito_gera_linha_de_admissibilidade():
    layout = criar_layout(k=2, n=2, admissibility=[[0, 1], [1, 1]])
    modelo = build_plan_model(_problema([3, 4], layout))
    linha = next(r for r in modelo.constraints if r.name == "admissivel_0_0")
    assert linha.coefs == ((0, 1.0),) and linha.hi == 0.0


def test_modelo_de_referencia_tem_9000_variaveis_de_cada_tipo():
    layout = criar_layout(k=30, capacity=50, process_time=30.0, n=300, dest_cap=[5] * 300, chute_cap=[15] * 30)
    modelo = build_plan_model(_problema([100] * 300, layout, T=30000.0))
    assert sum(v.name.startswith("X") for v in modelo.variables) == 9000
    assert sum(v.name.startswith("Y") for v in modelo.variables) == 9000


def test_destino_unico_limitado_pela_capacidade():
    layout = criar_layout(k=1, n=1, process_time=30.0)
    plano = plan_shift(DemandForecast((10,), 150.0), layout)
    assert plano.Y.tolist() == [[5]]
    assert plano.X.tolist() == [[1]]
    assert plano.status == SolveStatus.OPTIMAL


def test_rampa_direta_recebe_maior_demanda():
    kinds = [ChuteKind.DIRECT, ChuteKind.SPIRAL]
    layout = criar_layout(k=2, n=3, kinds=kinds, dest_cap=[2, 2, 2], chute_cap=[1, 3])
    fixados, residual = assign_direct_chutes(_problema([5, 9, 7], layout))
    assert fixados == {1: 0}
    assert residual.destinations == (0, 2)
    assert residual.columns == (1,)
    assert residual.fixed[0][:2] == (1, 0)


def test_sem_rampas_diretas_nada_muda():
    layout = criar_layout(k=2, n=3)
    problema = _problema([5, 9, 7], layout)
    fixados, residual = assign_direct_chutes(problema)
    assert fixados == {}
    assert residual is problema


def test_empate_de_demanda_vai_para_o_menor_indice():
    kinds = [ChuteKind.DIRECT, ChuteKind.DIRECT, ChuteKind.SPIRAL]
    layout = criar_layout(k=3, n=3, kinds=kinds, chute_cap=[1, 1, 3])
    fixados, _ = assign_direct_chutes(_problema([4, 4, 1], layout))
    assert fixados == {0: 0, 1: 1}


def test_rampa_direta_respeita_admissibilidade():
    kinds = [ChuteKind.DIRECT, ChuteKind.SPIRAL]
    layout = criar_layout(k=2, n=2, kinds=kinds, admissibility=[[0, 1], [1, 1]], chute_cap=[1, 2])
    fixados, _ = assign_direct_chutes(_problema([9, 2], layout))
    assert fixados == {1: 0}


def test_mais_rampas_diretas_que_destinos():
    kinds = [ChuteKind.DIRECT, ChuteKind.DIRECT]
    layout = criar_layout(k=2, n=1, kinds=kinds, chute_cap=[1, 1])
    with pytest.raises(ConfigError):
        assign_direct_chutes(_problema([3], layout))


def test_transbordo_mantem_o_restante_no_residual():
    kinds = [ChuteKind.DIRECT, ChuteKind.SPIRAL]
    # Rampa direta com t = 10 s num turno de 50 s: no máximo 5 encomendas
    layout = criar_layout(k=2, n=2, kinds=kinds, dest_cap=[2, 2], chute_cap=[1, 2])
    problema = _problema([8, 3], layout, T=50.0)
    _, residual = assign_direct_chutes(problema)
    assert residual.destinations == (0, 1)
    assert residual.demand == (3, 3)
    assert residual.dest_caps == (1, 2)

    plano = solve_plan(residual)
    assert plano.Y[0, 0] == 5
    assert plano.direct == {0: 0}
    assert audit_plan(plano, problema) == []


def test_sem_transbordo_o_excedente_da_rampa_direta_fica_fora():
    kinds = [ChuteKind.DIRECT, ChuteKind.SPIRAL]
    layout = criar_layout(k=2, n=2, kinds=kinds, dest_cap=[2, 2], chute_cap=[1, 2])
    problema = _problema([8, 3], layout, T=50.0)
    _, residual = assign_direct_chutes(problema, spillover=False)
    assert residual.destinations == (1,)
    assert residual.demand == (3,)

    forecast = DemandForecast((8, 3), 50.0)
    com = plan_shift(forecast, layout)
    sem = plan_shift(forecast, layout, spillover=False)
    assert com.planned_parcels == 10
    assert sem.planned_parcels == 8


def test_plano_com_rampa_direta_completo():
    kinds = [ChuteKind.SPIRAL, ChuteKind.DIRECT, ChuteKind.SPIRAL]
    layout = criar_layout(k=3, n=3, kinds=kinds, chute_cap=[3, 1, 3])
    forecast = DemandForecast((4, 10, 6), 3600.0)
    plano = plan_shift(forecast, layout)
    assert plano.X[1].tolist() == [0, 1, 0]
    assert plano.planned_parcels == 20
    assert audit_plan(plano, build_problem(forecast, layout)) == []
    df = plan_to_df(plano)
    assert df.loc[df["destination"] == 2, "direct"].tolist() == [True]


def test_precondicao_de_vagas():
    layout = criar_layout(k=1, n=3, dest_cap=[1, 1, 1], chute_cap=[2])
    with pytest.raises(InfeasibleError) as erro:
        check_plan_preconditions(_problema([1, 1, 1], layout))
    assert erro.value.precondition == "Σ N_j ≥ n"


def test_destino_sem_demanda_nao_precisa_de_rampa():
    layout = criar_layout(k=1, n=3, dest_cap=[1, 1, 1], chute_cap=[2])
    plano = solve_plan(_problema([2, 0, 3], layout))
    assert plano.X[:, 0].tolist() == [1, 0, 1]
    assert plano.planned_parcels == 5


def test_heuristica_gera_solucao_viavel():
    layout = criar_layout(k=3, n=4, process_time=30.0, dest_cap=[2] * 4, chute_cap=[2, 2, 2])
    problema = _problema([40, 15, 30, 5], layout, T=1200.0)
    X, Y = heuristic_plan(problema)
    modelo = build_plan_model(problema)
    assert check_solution(modelo, np.concatenate([X.ravel(), Y.ravel()])) == []


def test_objetivo_de_casamentos():
    layout = criar_layout(k=3, n=2, dest_cap=[3, 3], chute_cap=[2, 2, 2])
    plano = plan_shift(DemandForecast((5, 1), 3600.0), layout, ObjectiveKind.MATCHES)
    # O destino 2 só tem uma encomenda: uma rampa
    assert plano.X.sum(axis=1).tolist() == [3, 1]
    assert plano.objective_value == 4.0


def _enumera(totais, caps, M, N, A):
    """Ótimo de Σ Y por enumeração de todos os X; Y ótimo de cada X via fluxo máximo"""
    n, k = len(totais), len(caps)
    melhor = None
    for bits in itertools.product((0, 1), repeat=n * k):
        X = np.array(bits).reshape(n, k)
        if np.any(X > A) or np.any(X.sum(axis=0) > N) or np.any(X.sum(axis=1) > M):
            continue
        if any(totais[i] > 0 and X[i].sum() == 0 for i in range(n)):
            continue
        if any(totais[i] == 0 and X[i].sum() > 0 for i in range(n)):
            continue
        valor = _fluxo_com_minimos(totais, caps, X)
        if valor is not None and (melhor is None or valor > melhor):
            melhor = valor
    return melhor


def _fluxo_com_minimos(totais, caps, X):
    # Reserva uma encomenda por casamento (X ≤ Y) e completa com fluxo máximo
    n, k = X.shape
    resto_d = [totais[i] - X[i].sum() for i in range(n)]
    resto_c = [caps[j] - X[:, j].sum() for j in range(k)]
    if min(resto_d + resto_c, default=0) < 0:
        return None
    g = nx.DiGraph()
    for i in range(n):
        g.add_edge("s", ("d", i), capacity=resto_d[i])
        for j in range(k):
            if X[i, j]:
                g.add_edge(("d", i), ("c", j), capacity=min(totais[i], caps[j]) - 1)
    for j in range(k):
        g.add_edge(("c", j), "t", capacity=resto_c[j])
    valor, _ = nx.maximum_flow(g, "s", "t")
    return int(X.sum()) + int(valor)


def test_equivale_a_enumeracao_com_fluxo():
    rng = np.random.default_rng(5)
    testados = 0
    for _ in range(200):
        n, k = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        totais = [int(b) for b in rng.integers(0, 7, size=n)]
        t = float(rng.integers(5, 20))
        T = float(rng.integers(10, 80))
        M = [int(m) for m in rng.integers(1, k + 1, size=n)]
        N = [int(v) for v in rng.integers(1, n + 1, size=k)]
        A = rng.integers(0, 2, size=(n, k))
        A[np.arange(n), rng.integers(0, k, size=n)] = 1
        layout = criar_layout(k=k, n=n, process_time=t, dest_cap=M, chute_cap=N,
                              admissibility=A.tolist())
        problema = _problema(totais, layout, T=T)
        caps = list(problema.capacities)
        esperado = _enumera(totais, caps, np.array(M), np.array(N), A)
        if esperado is None:
            with pytest.raises(InfeasibleError):
                solve_plan(problema)
            continue
        plano = solve_plan(problema)
        assert plano.objective_value == esperado
        assert audit_plan(plano, problema) == []
        testados += 1
    assert testados >= 50


def test_auditor_aponta_violacoes():
    layout = criar_layout(k=2, n=2, dest_cap=[1, 1], chute_cap=[1, 1])
    problema = _problema([3, 2], layout)
    plano = solve_plan(problema)
    X = plano.X.copy()
    X[0] = [1, 1]
    ruim = type(plano)(X=X, Y=plano.Y, objective_value=0.0, objective_kind=plano.objective_kind,
                       chute_ids=plano.chute_ids)
    violacoes = audit_plan(ruim, problema)
    assert any("M_i" in v for v in violacoes)


def test_mapeamento_para_exportacao():
    layout = criar_layout(k=2, n=2)
    plano = plan_shift(DemandForecast((3, 1), 3600.0), layout)
    mapa = plan_to_mapping(plano)
    assert sorted(mapa) == [1, 2]
    assert sum(v for rampas in mapa.values() for _, v in rampas) == 4


@pytest.mark.slow
def test_referencia_planeja_toda_a_carga(cenario_referencia):
    c = cenario_referencia
    plano = plan_shift(c.forecast, c.layout, c.objective_kind)
    assert plano.planned_parcels == 29335
    assert audit_plan(plano, build_problem(c.forecast, c.layout)) == []


@pytest.mark.slow
def test_layout_restrito_planeja_quase_toda_a_carga(cenario_restrito):
    c = cenario_restrito
    plano = plan_shift(c.forecast, c.layout, c.objective_kind)
    assert 0.97 * 29335 <= plano.planned_parcels <= 29335
