import logging
import os

from comandos.comum import indice_onda, preparar
from components.relatorio import formatar_tabela_kpis
from optsort_core import ConfigError, kpis_to_df
from optsort_tuner import robustness_sweep
from utils.exportacao import garantir_pasta, salvar_csv, salvar_texto

logger = logging.getLogger(__name__)

FAIXA_PADRAO = (0.8, 1.2)


def executar_sweep(args, config):
    """
    Subcomando sweep: uma alocação OPTSORT simulada com várias sementes de eficiência

    Returns:
        int: Código de saída
    """
    if args.n_seeds < 1:
        raise ConfigError("--n-seeds", "deve ser ≥ 1")
    cenario, plano, _, equipe = preparar(args, config)
    w = indice_onda(cenario, args.wave)
    faixa = args.efficiency_range or FAIXA_PADRAO

    pior, df_sementes = robustness_sweep(cenario, plano, equipe, cap_bar=cenario.cap_bar,
                                         efficiency_range=faixa, n_seeds=args.n_seeds, wave_index=w,
                                         jobs=args.jobs, limits=config.limites())
    df_kpis = kpis_to_df([pior.to_row("optsort", f"{cenario.name}-pior", cenario.cap_bar)])

    pasta = garantir_pasta(args.out_dir)
    salvar_csv(df_sementes, os.path.join(pasta, "varredura.csv"))
    salvar_csv(df_kpis, os.path.join(pasta, "kpis.csv"))
    texto = (f"Faixa de eficiência: {faixa[0]}..{faixa[1]}  sementes: {args.n_seeds}\n\n"
             f"{df_sementes.to_string(index=False)}\n\n{formatar_tabela_kpis(df_kpis)}")
    salvar_texto(texto, os.path.join(pasta, "relatorio.txt"))
    print(texto)
    return 0
