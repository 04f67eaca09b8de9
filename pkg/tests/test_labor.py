import numpy as np
import pytest

from construtores import criar_layout
from optsort_core import ChuteKind, ObjectiveKind, OptsortError, SortPlan
from optsort_labor import (
    PenaltyMatrix, StaffingPlan, assign_workers, brute_force_staffing, build_roster,
    effective_process_times, nominal_process_times, penalty_from_load, staffing_for_plan,
    staffing_to_df, total_penalty, validate_penalties,
)


def _matriz(linhas, pares=()):
    return PenaltyMatrix(np.array(linhas, dtype=float), frozenset(pares))


def test_penalidade_a_partir_da_carga():
    # T/t = 1800/30 = 60 encomendas por trabalhador
    z = penalty_from_load([100], [30.0], 1800.0)
    assert z.Z[0].tolist() == [100, 40, 0, 0, 0, 0, 0]


def test_penalidade_de_carga_zero():
    z = penalty_from_load([0, 100], [30.0, 30.0], 1800.0)
    assert not z.Z[0].any()


def test_penalidade_de_rampa_de_dois_operadores():
    z = penalty_from_load([50], [30.0], 1800.0, two_handler=[0])
    assert z.Z[0, :3].tolist() == [50, 50, 0]
    assert validate_penalties(z) == []


def test_penalidade_quadratica():
    z = penalty_from_load([90], [30.0], 1800.0, exponent=2)
    assert z.Z[0, :3].tolist() == pytest.approx([2.25, 0.25, 0.0])


def test_linha_crescente_e_violacao():
    assert validate_penalties(_matriz([[1, 2, 0]])) != []


def test_linha_convexa_decrescente_sem_violacao():
    assert validate_penalties(_matriz([[9, 5, 2, 0, 0]])) == []


def test_patamar_positivo_permitido_para_dois_operadores():
    assert validate_penalties(_matriz([[5, 5, 0]], pares=[0])) == []
    assert validate_penalties(_matriz([[5, 5, 0]])) != []


def test_marginal_crescente_e_violacao():
    violacoes = validate_penalties(_matriz([[9, 8, 2, 0]]))
    assert any(v.rule == "penalidade marginal não crescente" for v in violacoes)


def test_exemplo_de_duas_rampas():
    z = _matriz([[10, 4, 1, 0], [8, 2, 0, 0]])
    plano = assign_workers(z, 2)
    assert plano.sigma == (1, 1)
    assert plano.penalty == 6
    assert brute_force_staffing(z, 2).penalty == 6


def test_sem_trabalhadores():
    z = _matriz([[10, 4, 1, 0], [8, 2, 0, 0]])
    plano = assign_workers(z, 0)
    assert plano.sigma == (0, 0)
    assert plano.penalty == 18


def test_movimento_em_par_para_rampa_de_dois_operadores():
    z = _matriz([[6, 6, 0, 0, 0], [5, 3, 2, 2, 2]], pares=[0])
    plano = assign_workers(z, 2)
    assert plano.sigma == (2, 0)
    assert plano.penalty == brute_force_staffing(z, 2).penalty == 5


def test_trabalhadores_sobrando_ficam_ociosos():
    z = _matriz([[3, 0, 0], [2, 0, 0]])
    plano = assign_workers(z, 5)
    assert plano.sigma == (1, 1)
    assert plano.idle == 3
    assert plano.penalty == 0


def test_forca_bruta_saturada_e_uma_rampa():
    z = _matriz([[4, 2, 0], [3, 1, 0]])
    assert brute_force_staffing(z, 6).penalty == 0
    assert brute_force_staffing(_matriz([[4, 2, 0]]), 3).sigma == (3,)


def test_forca_bruta_respeita_o_limite_de_enumeracoes():
    z = _matriz([[1, 0]] * 20)
    with pytest.raises(OptsortError):
        brute_force_staffing(z, 30)


def _linha_convexa(rng, colunas):
    marginais = np.sort(rng.integers(0, 6, size=colunas - 1))[::-1]
    return np.concatenate([np.cumsum(marginais[::-1])[::-1], [0]])


def test_guloso_otimo_sem_dois_operadores():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        k, p = int(rng.integers(1, 7)), int(rng.integers(0, 9))
        colunas = int(rng.integers(2, 7))
        z = _matriz([_linha_convexa(rng, colunas) for _ in range(k)])
        assert validate_penalties(z) == []
        plano = assign_workers(z, p)
        assert plano.penalty == pytest.approx(brute_force_staffing(z, p).penalty)
        assert plano.assigned + plano.idle == p


def _otimo_local(z, sigma):
    atual = total_penalty(z, sigma)
    for a in range(z.k):
        if sigma[a] == 0:
            continue
        for b in range(z.k):
            if a == b:
                continue
            vizinho = list(sigma)
            vizinho[a] -= 1
            vizinho[b] += 1
            if total_penalty(z, vizinho) < atual - 1e-9:
                return False
    return True


def test_guloso_localmente_otimo_com_dois_operadores():
    rng = np.random.default_rng(8)
    for _ in range(300):
        k, p = int(rng.integers(2, 7)), int(rng.integers(0, 9))
        cargas = rng.integers(0, 200, size=k)
        pares = [j for j in range(k) if rng.random() < 0.4]
        z = penalty_from_load(cargas, [30.0] * k, 1800.0, two_handler=pares, max_workers=8)
        assert validate_penalties(z) == []
        guloso = assign_workers(z, p)
        polido = assign_workers(z, p, polish=True)
        assert polido.assigned == guloso.assigned <= p
        assert polido.penalty <= guloso.penalty + 1e-9
        assert _otimo_local(z, list(polido.sigma))


def test_polimento_so_quando_pedido(monkeypatch):
    import optsort_labor

    chamadas = []

    def _registra(matrix, sigma):
        chamadas.append(list(sigma))
        return sigma

    monkeypatch.setattr(optsort_labor, "_polir", _registra)
    z = _matriz([[4, 2, 0], [3, 1, 0]])
    assign_workers(z, 2)
    assert chamadas == []
    plano = assign_workers(z, 2, polish=True)
    assert chamadas == [list(plano.sigma)]


def _plano(layout, volumes):
    Y = np.array([volumes])
    X = (Y > 0).astype(int)
    return SortPlan(X=X, Y=Y, objective_value=float(Y.sum()), objective_kind=ObjectiveKind.PARCELS,
                    chute_ids=layout.chute_ids())


def test_equipe_para_o_plano_ignora_rampas_diretas():
    kinds = [ChuteKind.SPIRAL, ChuteKind.DIRECT, ChuteKind.SPIRAL]
    layout = criar_layout(k=3, n=1, kinds=kinds, process_time=30.0, chute_cap=[1, 1, 1])
    matriz, equipe = staffing_for_plan(_plano(layout, [100, 50, 30]), layout, 1800.0, 3)
    assert not matriz.Z[1].any()
    assert equipe.sigma == (2, 0, 1)
    assert equipe.idle == 0


def test_tempos_efetivos_por_rampa():
    kinds = [ChuteKind.SPIRAL, ChuteKind.DIRECT, ChuteKind.SPIRAL]
    layout = criar_layout(k=3, n=1, kinds=kinds, process_time=30.0)
    equipe = StaffingPlan((2, 0, 0), 0.0, idle=1)
    tempos = effective_process_times(layout, equipe, [1.0, 0.5, 1.2])
    assert tempos == (20000, 30000, None)
    assert nominal_process_times(layout, equipe, 3) == (15000, 30000, None)


def test_rampa_de_dois_operadores_com_um_trabalhador_para():
    layout = criar_layout(k=1, n=1, process_time=30.0, two_handler=(0,))
    assert effective_process_times(layout, StaffingPlan((1,), 0.0), [1.0]) == (None,)
    assert effective_process_times(layout, StaffingPlan((2,), 0.0), [1.0, 1.0]) == (15000,)


def test_escala_consome_eficiencias_em_ordem():
    layout = criar_layout(k=2, n=1)
    escala = build_roster(layout, StaffingPlan((0, 2), 0.0, idle=1), [0.9, 1.1, 1.0])
    assert [(w.efficiency, w.chute) for w in escala] == [(0.9, 2), (1.1, 2), (1.0, None)]
    with pytest.raises(OptsortError):
        build_roster(layout, StaffingPlan((0, 2), 0.0), [1.0])


def test_tabela_de_equipe():
    df = staffing_to_df(StaffingPlan((1, 0, 2), 3.0, idle=4), (1, 2, 3))
    assert df["chute"].tolist() == [1, 2, 3, "idle"]
    assert df["workers"].tolist() == [1, 0, 2, 4]
