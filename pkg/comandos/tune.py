import logging
import os

from comandos.comum import indice_onda, preparar
from components.relatorio import formatar_tabela_kpis
from optsort_core import ConfigError, kpis_to_df
from optsort_tuner import StopReason, cap_bar_label, trace_to_df, tune_capacity
from utils.exportacao import garantir_pasta, salvar_csv, salvar_texto

logger = logging.getLogger(__name__)


def executar_tune(args, config):
    """
    Subcomando tune: ajusta C̄ em malha fechada e grava o traço do ajuste

    Returns:
        int: Código de saída
    """
    if args.seeds < 1:
        raise ConfigError("--seeds", "deve ser ≥ 1")
    cenario, plano, _, equipe = preparar(args, config)
    w = indice_onda(cenario, args.wave)
    sementes = [cenario.seed + i for i in range(args.seeds)]

    traco = tune_capacity(cenario, plano, equipe, initial=cenario.cap_bar, step=args.step,
                          max_iters=args.max_iters, wave_index=w, seeds=sementes,
                          per_chute=args.per_chute, limits=config.limites())
    df_traco = trace_to_df(traco, cenario)
    rotulo_final = cap_bar_label(traco.final_cap_bar, cenario)
    df_kpis = kpis_to_df([traco.certificate.to_row("optsort", cenario.name, rotulo_final)])

    pasta = garantir_pasta(args.out_dir)
    salvar_csv(df_traco, os.path.join(pasta, "ajuste.csv"))
    salvar_csv(df_kpis, os.path.join(pasta, "kpis.csv"))
    texto = (f"{df_traco.to_string(index=False)}\n\n"
             f"Parada: {traco.stop_reason.value}  C̄ final: {rotulo_final}\n\n"
             f"{formatar_tabela_kpis(df_kpis)}")
    salvar_texto(texto, os.path.join(pasta, "relatorio.txt"))
    print(texto)

    if traco.stop_reason == StopReason.BLOCKAGE_BOUNDARY and traco.certificate.blockages > 0:
        logger.warning("Nenhum C̄ seguro: o certificado ainda tem %d bloqueios", traco.certificate.blockages)
    return 0
