import pytest

from construtores import criar_cenario, criar_layout, criar_onda, planejar
from optsort_cenarios import generate_scenario
from optsort_core import ChuteKind
from optsort_tuner import StopReason, cap_bar_label, robustness_sweep, trace_to_df, tune_capacity


@pytest.fixture
def plano_fila(cenario_fila):
    return planejar(cenario_fila)


def test_sobe_cap_bar_ate_o_primeiro_bloqueio(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    traco = tune_capacity(cenario_fila, plano, equipe, initial=2, step=1)
    assert [it.cap_bar for it in traco.iterations] == [(2,), (3,), (4,), (5,)]
    assert [it.kpis.rj for it in traco.iterations] == [4, 3, 2, 2]
    assert [it.kpis.blockages for it in traco.iterations] == [0, 0, 0, 1]
    assert traco.stop_reason == StopReason.BLOCKAGE_BOUNDARY
    assert traco.final_cap_bar == (4,)
    assert (traco.certificate.rj, traco.certificate.blockages) == (2, 0)


def test_bloqueio_rejeitado_conta_recirculacao(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    traco = tune_capacity(cenario_fila, plano, equipe, initial=5, step=1)
    assert len(traco.iterations) == 1
    assert traco.stop_reason == StopReason.BLOCKAGE_BOUNDARY
    kpis = traco.iterations[0].kpis
    assert (kpis.rc, kpis.rj, kpis.blockages) == (1, 2, 1)
    assert traco.final_cap_bar == (5,)
    assert traco.certificate.blockages == 1


def test_para_quando_as_rejeicoes_zeram():
    layout = criar_layout(k=1, capacity=4, process_time=10.0)
    cenario = criar_cenario(layout, [3], [criar_onda([0] * 3, [0, 1, 2], length=120.0)], workers=1)
    plano, equipe = planejar(cenario)
    traco = tune_capacity(cenario, plano, equipe)
    assert len(traco.iterations) == 1
    assert traco.stop_reason == StopReason.ZERO_REJECTIONS
    assert traco.final_cap_bar == (4,)
    assert traco.certificate.rj == 0


def test_limite_de_iteracoes(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    traco = tune_capacity(cenario_fila, plano, equipe, initial=2, step=1, max_iters=2)
    assert traco.stop_reason == StopReason.MAX_ITERS
    assert traco.final_cap_bar == (3,)
    assert traco.certificate.rj == 3


def test_ajuste_por_rampa_congela_a_rampa_que_bloqueou(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    traco = tune_capacity(cenario_fila, plano, equipe, initial=2, step=1, per_chute=True)
    assert [it.cap_bar for it in traco.iterations] == [(2,), (3,), (4,), (5,), (4,)]
    assert traco.stop_reason == StopReason.BLOCKAGE_BOUNDARY
    assert traco.final_cap_bar == (4,)
    assert traco.certificate.blockages == 0


def test_varias_sementes_com_eficiencia_nominal(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    uma = tune_capacity(cenario_fila, plano, equipe, initial=2, step=1)
    varias = tune_capacity(cenario_fila, plano, equipe, initial=2, step=1, seeds=[0, 1, 2])
    assert [it.kpis for it in uma.iterations] == [it.kpis for it in varias.iterations]


def test_passo_invalido(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    with pytest.raises(ValueError):
        tune_capacity(cenario_fila, plano, equipe, step=0)


def test_tabela_do_ajuste(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    traco = tune_capacity(cenario_fila, plano, equipe, initial=2, step=1)
    df = trace_to_df(traco, cenario_fila)
    assert list(df.columns) == ["iter", "cap_bar", "Rc", "Rj", "blockages", "St_min"]
    assert df["iter"].tolist() == [1, 2, 3, 4]
    assert df["cap_bar"].tolist() == [2, 3, 4, 5]


def test_rotulo_do_cap_bar():
    layout = criar_layout(k=3, capacity=4, kinds=[ChuteKind.SPIRAL, ChuteKind.DIRECT, ChuteKind.SPIRAL])
    cenario = criar_cenario(layout, [1], [criar_onda([0], [0])])
    assert cap_bar_label((7, 1, 7), cenario) == 7
    assert cap_bar_label((3, 1, 4), cenario) == "3;1;4"


def test_varredura_com_eficiencia_fixa_repete_as_sementes(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    pior, tabela = robustness_sweep(cenario_fila, plano, equipe, efficiency_range=(1.0, 1.0), n_seeds=3)
    assert tabela["seed"].tolist() == [0, 1, 2]
    assert tabela["Rj"].nunique() == 1
    assert tabela["blockages"].tolist() == [0, 0, 0]
    assert (pior.rj, pior.blockages) == (2, 0)


def test_varredura_pior_caso(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    pior, tabela = robustness_sweep(cenario_fila, plano, equipe, cap_bar=4, efficiency_range=(0.8, 1.2),
                                    n_seeds=5, base_seed=10)
    assert tabela["seed"].tolist() == [10, 11, 12, 13, 14]
    assert pior.rj == tabela["Rj"].max()
    assert pior.blockages == tabela["blockages"].max()
    assert pior.rc == tabela["Rc"].max()


def test_varredura_exige_sementes(cenario_fila, plano_fila):
    plano, equipe = plano_fila
    with pytest.raises(ValueError):
        robustness_sweep(cenario_fila, plano, equipe, n_seeds=0)


@pytest.mark.slow
def test_ajuste_na_referencia_para_em_55(cenario_referencia, plano_referencia):
    plano, equipe = plano_referencia
    traco = tune_capacity(cenario_referencia, plano, equipe, initial=50, step=5)
    assert traco.iterations[0].kpis.rj > 0
    assert traco.stop_reason == StopReason.ZERO_REJECTIONS
    assert cap_bar_label(traco.final_cap_bar, cenario_referencia) == 55
    assert (traco.certificate.rc, traco.certificate.rj, traco.certificate.blockages) == (0, 0, 0)


@pytest.mark.slow
def test_ajuste_no_layout_restrito_para_ate_65(cenario_restrito, plano_restrito):
    plano, equipe = plano_restrito
    traco = tune_capacity(cenario_restrito, plano, equipe, initial=50, step=5)
    assert traco.iterations[0].kpis.rj > 0
    assert traco.stop_reason == StopReason.ZERO_REJECTIONS
    assert 55 <= cap_bar_label(traco.final_cap_bar, cenario_restrito) <= 65
    assert (traco.certificate.rc, traco.certificate.rj, traco.certificate.blockages) == (0, 0, 0)


@pytest.mark.slow
def test_varredura_com_eficiencias_variaveis_sem_rejeicoes():
    cenario = generate_scenario(arrival_profile="uniform")
    plano, equipe = planejar(cenario)
    pior, tabela = robustness_sweep(cenario, plano, equipe, cap_bar=60, efficiency_range=(0.8, 1.2), n_seeds=20)
    assert tabela["seed"].tolist() == list(range(cenario.seed, cenario.seed + 20))
    assert (tabela[["Rc", "Rj", "blockages"]] == 0).all().all()
    assert (pior.rc, pior.rj, pior.blockages) == (0, 0, 0)
    assert pior.wave_size == cenario.waves[0].size
