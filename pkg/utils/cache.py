import logging
import os
from functools import lru_cache

from optsort_cenarios import load_scenario
from optsort_labor import staffing_for_plan
from optsort_planner import plan_shift

logger = logging.getLogger(__name__)


# Função para carregar um cenário com cache
def carregar_cenario(caminho):
    """
    Carrega o cenário do arquivo, reaproveitando a leitura enquanto o arquivo não mudar

    Args:
        caminho (str): Caminho do arquivo YAML

    Returns:
        Scenario: Cenário validado
    """
    caminho = os.path.abspath(caminho)
    return _cenario_em_cache(caminho, os.path.getmtime(caminho))


@lru_cache(maxsize=8)
def _cenario_em_cache(caminho, mtime):
    return load_scenario(caminho)


# Função para planejar o turno e alocar a equipe com cache
@lru_cache(maxsize=8)
def carregar_plano_e_equipe(cenario, limites):
    """
    Resolve o planejamento do turno e a alocação de trabalhadores

    Args:
        cenario (Scenario): Cenário
        limites (SolveLimits): Limites do solver

    Returns:
        tuple: (SortPlan, PenaltyMatrix, StaffingPlan)
    """
    logger.info("Planejando turno do cenário %s", cenario.name)
    plano = plan_shift(cenario.forecast, cenario.layout, cenario.objective_kind, limites,
                       cenario.direct_spillover)
    matriz, equipe = staffing_for_plan(plano, cenario.layout, cenario.forecast.shift_length, cenario.workers)
    return plano, matriz, equipe
