import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

from optsort_core import ConfigError
from optsort_solver import BACKENDS, SolveLimits

# Carregar variáveis de ambiente
load_dotenv()


@dataclass(frozen=True)
class Configuracao:
    """
    Parâmetros globais lidos do .env

    Attributes:
        solver (str): Backend do solver ('embedded' ou 'highs')
        time_limit (float, optional): Limite de tempo por solve, em segundos
        node_limit (int): Limite de nós do branch-and-bound
        mip_gap (float): Gap relativo aceito como solução viável
        out_dir (str): Pasta padrão dos resultados
        log_level (str): Nível de log
        jobs (int): Processos paralelos
    """
    solver: str = "embedded"
    time_limit: Optional[float] = None
    node_limit: int = 100_000
    mip_gap: float = 0.0
    out_dir: str = "resultados"
    log_level: str = "INFO"
    jobs: int = 1

    def limites(self) -> SolveLimits:
        return SolveLimits(self.time_limit, self.node_limit, self.mip_gap, self.solver)


# Função para ler uma variável numérica do ambiente
def _numero(nome, tipo, padrao):
    valor = os.getenv(nome)
    if valor is None or valor.strip() == "":
        return padrao
    try:
        return tipo(valor)
    except ValueError:
        raise ConfigError(nome, f"valor inválido: {valor!r}")


def carregar_configuracao():
    """
    Lê as variáveis OPTSORT_* do ambiente (e do .env)

    Returns:
        Configuracao: Configuração com os padrões para variáveis ausentes
    """
    solver = os.getenv("OPTSORT_SOLVER", "embedded").strip().lower()
    if solver not in BACKENDS:
        raise ConfigError("OPTSORT_SOLVER", f"use um de {sorted(BACKENDS)}")
    config = Configuracao(
        solver=solver,
        time_limit=_numero("OPTSORT_TIME_LIMIT", float, None),
        node_limit=_numero("OPTSORT_NODE_LIMIT", int, 100_000),
        mip_gap=_numero("OPTSORT_MIP_GAP", float, 0.0),
        out_dir=os.getenv("OPTSORT_OUT_DIR", "resultados"),
        log_level=os.getenv("OPTSORT_LOG_LEVEL", "INFO").upper(),
        jobs=_numero("OPTSORT_JOBS", int, 1),
    )
    if config.node_limit < 1:
        raise ConfigError("OPTSORT_NODE_LIMIT", "deve ser ≥ 1")
    if config.jobs < 1:
        raise ConfigError("OPTSORT_JOBS", "deve ser ≥ 1")
    return config
