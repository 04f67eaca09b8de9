import argparse

from optsort_cenarios import ARRIVAL_PROFILES, DESTINATION_MIXES, LAYOUT_KINDS


def faixa_eficiencia(texto):
    """Converte 'lo,hi' em (lo, hi)"""
    try:
        lo, hi = (float(v) for v in texto.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"faixa inválida: {texto!r} (use lo,hi)")
    if lo <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("a faixa exige 0 < lo ≤ hi")
    return lo, hi


def lista_ondas(texto):
    """Converte '1,3' em [0, 2] (índices das ondas); 'all' devolve None"""
    if texto.strip().lower() == "all":
        return None
    try:
        ondas = [int(v) - 1 for v in texto.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"ondas inválidas: {texto!r} (use 1,2 ou all)")
    if any(w < 0 for w in ondas):
        raise argparse.ArgumentTypeError("ondas começam em 1")
    return ondas


def _argumentos_comuns(parser, out_dir):
    parser.add_argument("--scenario", required=True, help="arquivo YAML do cenário")
    parser.add_argument("--seed", type=int, default=None, help="semente das eficiências (padrão: a do cenário)")
    parser.add_argument("--workers", type=int, default=None, help="número de trabalhadores")
    parser.add_argument("--efficiency-range", type=faixa_eficiencia, default=None,
                        help="faixa de eficiência lo,hi (ex.: 0.8,1.2)")
    parser.add_argument("--out-dir", default=out_dir, help="pasta dos resultados")
    parser.add_argument("--cap-bar", type=int, default=None, help="capacidade efetiva C̄ das rampas espirais")


def criar_parser(out_dir="resultados", jobs=1):
    """
    Cria o parser de linha de comando com os subcomandos run, tune, sweep e generate

    Args:
        out_dir (str): Pasta padrão dos resultados
        jobs (int): Número padrão de processos

    Returns:
        argparse.ArgumentParser: Parser configurado
    """
    parser = argparse.ArgumentParser(prog="optsort",
                                     description="Otimizador de centro de triagem OPTSORT")
    sub = parser.add_subparsers(dest="comando", required=True)

    run = sub.add_parser("run", help="planeja, aloca e simula ondas (GREEDY e/ou OPTSORT)")
    _argumentos_comuns(run, out_dir)
    run.add_argument("--algo", choices=["optsort", "greedy", "both"], default="both")
    run.add_argument("--waves", type=lista_ondas, default=[0], help="ondas (1,2,...) ou all; padrão 1")
    run.add_argument("--emit-trace", action="store_true", help="exporta o traço de eventos do gêmeo")
    run.add_argument("--jobs", type=int, default=jobs, help="processos paralelos para as ondas")
    run.add_argument("--excel", action="store_true", help="grava também um arquivo Excel com todas as tabelas")

    tune = sub.add_parser("tune", help="ajusta C̄ em malha fechada com o gêmeo digital")
    _argumentos_comuns(tune, out_dir)
    tune.add_argument("--step", type=int, default=5)
    tune.add_argument("--max-iters", type=int, default=10)
    tune.add_argument("--seeds", type=int, default=1, help="sementes de eficiência por iteração (pior caso)")
    tune.add_argument("--per-chute", action="store_true", help="ajusta C̄ por rampa")
    tune.add_argument("--wave", type=int, default=1, help="onda usada no ajuste (1-based)")

    sweep = sub.add_parser("sweep", help="varredura de robustez sobre sementes de eficiência")
    _argumentos_comuns(sweep, out_dir)
    sweep.add_argument("--n-seeds", type=int, default=20)
    sweep.add_argument("--jobs", type=int, default=jobs)
    sweep.add_argument("--wave", type=int, default=1, help="onda simulada (1-based)")

    gen = sub.add_parser("generate", help="gera um cenário sintético")
    gen.add_argument("--out", required=True, help="arquivo YAML de saída")
    gen.add_argument("--n", type=int, default=300, help="destinos")
    gen.add_argument("--k", type=int, default=30, help="rampas")
    gen.add_argument("--load", type=int, default=29335, help="carga prevista do turno")
    gen.add_argument("--kind", choices=LAYOUT_KINDS, default="unrestricted")
    gen.add_argument("--seed", type=int, default=7)
    gen.add_argument("--waves", type=int, default=10, help="número de ondas")
    gen.add_argument("--wave-size", type=int, default=2523)
    gen.add_argument("--workers", type=int, default=None)
    gen.add_argument("--efficiency-range", type=faixa_eficiencia, default=(1.0, 1.0))
    gen.add_argument("--arrival-profile", choices=ARRIVAL_PROFILES, default="surge",
                     help="perfil de entrada das ondas: pico no início ou uniforme")
    gen.add_argument("--destination-mix", choices=DESTINATION_MIXES, default="forecast",
                     help="destinos da onda proporcionais à previsão ou perfil aleatório")
    gen.add_argument("--name", default=None)
    return parser
