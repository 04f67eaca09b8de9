import logging
import sys

from comandos.generate import executar_generate
from comandos.run import executar_run
from comandos.sweep import executar_sweep
from comandos.tune import executar_tune
from components.argumentos import criar_parser
from optsort_core import ConfigError, InfeasibleError, OptsortError, SolverLimitError
from utils.config import carregar_configuracao

logger = logging.getLogger("optsort")

COMANDOS = {
    "run": executar_run,
    "tune": executar_tune,
    "sweep": executar_sweep,
    "generate": executar_generate,
}

# Códigos de saída
SAIDA_OK = 0
SAIDA_CONFIG = 2
SAIDA_INVIAVEL = 3
SAIDA_LIMITE = 4
SAIDA_IO = 5


def main(argv=None):
    """
    Ponto de entrada da linha de comando

    Args:
        argv (list, optional): Argumentos (padrão: sys.argv[1:])

    Returns:
        int: Código de saída
    """
    try:
        config = carregar_configuracao()
    except ConfigError as e:
        print(f"Erro de configuração: {e}", file=sys.stderr)
        return SAIDA_CONFIG

    logging.basicConfig(
        level=getattr(logging, config.log_level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = criar_parser(config.out_dir, config.jobs).parse_args(argv)

    try:
        return COMANDOS[args.comando](args, config)
    except ConfigError as e:
        logger.error("Erro de configuração: %s", e)
        return SAIDA_CONFIG
    except InfeasibleError as e:
        logger.error("Problema inviável: %s", e)
        return SAIDA_INVIAVEL
    except SolverLimitError as e:
        logger.error("Limite do solver sem solução viável: %s", e)
        return SAIDA_LIMITE
    except OSError as e:
        logger.error("Erro de leitura/gravação: %s", e)
        return SAIDA_IO
    except OptsortError as e:
        logger.error("Erro: %s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
