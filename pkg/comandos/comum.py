import dataclasses
import logging

from optsort_core import ConfigError
from utils.cache import carregar_cenario, carregar_plano_e_equipe

logger = logging.getLogger(__name__)


# Função para aplicar as opções da linha de comando sobre o cenário
def aplicar_opcoes(cenario, args):
    """
    Sobrescreve semente, equipe, faixa de eficiência e C̄ do cenário

    Args:
        cenario (Scenario): Cenário lido do arquivo
        args (argparse.Namespace): Opções da linha de comando

    Returns:
        Scenario: Cenário com as opções aplicadas
    """
    mudancas = {}
    if args.seed is not None:
        mudancas["seed"] = args.seed
    if args.workers is not None:
        if args.workers < 0:
            raise ConfigError("--workers", "deve ser ≥ 0")
        mudancas["workers"] = args.workers
    if args.efficiency_range is not None:
        mudancas["efficiency_range"] = tuple(args.efficiency_range)
    if args.cap_bar is not None:
        if args.cap_bar < 1:
            raise ConfigError("--cap-bar", "deve ser ≥ 1")
        mudancas["cap_bar"] = args.cap_bar
    return dataclasses.replace(cenario, **mudancas) if mudancas else cenario


def preparar(args, config):
    """
    Carrega o cenário, aplica as opções e resolve plano e equipe

    Returns:
        tuple: (Scenario, SortPlan, PenaltyMatrix, StaffingPlan)
    """
    cenario = aplicar_opcoes(carregar_cenario(args.scenario), args)
    plano, matriz, equipe = carregar_plano_e_equipe(cenario, config.limites())
    logger.info("Plano: %d encomendas planejadas (status=%s); equipe: %d alocados, %d ociosos",
                plano.planned_parcels, plano.status.value, equipe.assigned, equipe.idle)
    return cenario, plano, matriz, equipe


def indice_onda(cenario, numero):
    """Converte o número da onda (1-based) em índice, validando contra o cenário"""
    if not 1 <= numero <= len(cenario.waves):
        raise ConfigError("--wave", f"onda {numero} fora de 1..{len(cenario.waves)}")
    return numero - 1
