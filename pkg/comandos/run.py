import logging
import os
from concurrent.futures import ProcessPoolExecutor

import pandas as pd

from components.relatorio import formatar_tabela_kpis
from comandos.comum import preparar
from optsort_core import ConfigError, kpis_to_df
from optsort_executor import allocation_to_df, audit_allocation, build_execution_problem, solve_wave
from optsort_labor import nominal_process_times, staffing_to_df
from optsort_planner import plan_to_df, plan_to_mapping
from optsort_twin import Greedy, OptsortAllocation, compute_kpis, run_simulation, trace_to_df
from utils.exportacao import garantir_pasta, salvar_csv, salvar_excel, salvar_texto, salvar_yaml

logger = logging.getLogger(__name__)

ALGORITMOS = {"greedy": ("greedy",), "optsort": ("optsort",), "both": ("greedy", "optsort")}


def _rotulo_cenario(cenario, w, varias_ondas):
    return f"{cenario.name}-w{w + 1}" if varias_ondas else cenario.name


# Função executada por onda (em processo separado quando jobs > 1)
def _executar_onda(tarefa):
    cenario, plano, equipe, w, algos, limites, emitir_traco, varias_ondas = tarefa
    rotulo = _rotulo_cenario(cenario, w, varias_ondas)
    saida = {"onda": w, "kpis": [], "alocacao": None, "tracos": {}}

    for algo in algos:
        if algo == "greedy":
            politica, cap_bar = Greedy(), None
        else:
            tempos = nominal_process_times(cenario.layout, equipe, cenario.workers)
            problema = build_execution_problem(cenario.waves[w], cenario.layout, plano, cenario.cap_bar, tempos)
            alocacao = solve_wave(problema, limites)
            violacoes = audit_allocation(alocacao, problema)
            if violacoes:
                logger.warning("Alocação da onda %d com %d violações: %s", w + 1, len(violacoes), violacoes[:3])
            saida["alocacao"] = allocation_to_df(alocacao)
            politica, cap_bar = OptsortAllocation(alocacao, cenario.planned_rejection), cenario.cap_bar
        resultado = run_simulation(cenario, plano, equipe, politica, wave_index=w, record_trace=emitir_traco)
        saida["kpis"].append(compute_kpis(resultado).to_row(algo, rotulo, cap_bar))
        if emitir_traco:
            saida["tracos"][algo] = trace_to_df(resultado)
    return saida


def run_pipeline(cenario, plano, equipe, algo="both", ondas=(0,), limites=None, jobs=1,
                 emitir_traco=False):
    """
    Simula as ondas escolhidas com GREEDY e/ou OPTSORT

    Args:
        cenario (Scenario): Cenário (já com as opções aplicadas)
        plano (SortPlan): Plano do turno
        equipe (StaffingPlan): Alocação de trabalhadores
        algo (str): 'greedy', 'optsort' ou 'both'
        ondas (list): Índices (0-based) das ondas
        limites (SolveLimits): Limites do solver
        jobs (int): Processos paralelos (uma onda por tarefa)
        emitir_traco (bool): Guarda o traço de eventos do gêmeo

    Returns:
        dict: Tabelas 'kpis', 'plano', 'equipe', 'alocacao_w{n}' e 'traco_{algo}_w{n}'
    """
    algos = ALGORITMOS[algo]
    varias = len(ondas) > 1
    tarefas = [(cenario, plano, equipe, w, algos, limites, emitir_traco, varias) for w in ondas]
    if jobs > 1 and len(tarefas) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            saidas = list(pool.map(_executar_onda, tarefas))
    else:
        saidas = [_executar_onda(t) for t in tarefas]

    # Montagem sequencial, na ordem das ondas
    tabelas = {
        "kpis": kpis_to_df([linha for s in saidas for linha in s["kpis"]]),
        "plano": plan_to_df(plano),
        "equipe": staffing_to_df(equipe, plano.chute_ids),
    }
    for s in saidas:
        n = s["onda"] + 1
        if s["alocacao"] is not None:
            tabelas[f"alocacao_w{n}"] = s["alocacao"]
        for nome, traco in s["tracos"].items():
            tabelas[f"traco_{nome}_w{n}"] = traco
    return tabelas


def executar_run(args, config):
    """
    Subcomando run: grava KPIs, plano, equipe, alocações e o relatório comparativo

    Returns:
        int: Código de saída
    """
    cenario, plano, _, equipe = preparar(args, config)
    ondas = list(range(len(cenario.waves))) if args.waves is None else args.waves
    for w in ondas:
        if w >= len(cenario.waves):
            raise ConfigError("--waves", f"onda {w + 1} fora de 1..{len(cenario.waves)}")

    tabelas = run_pipeline(cenario, plano, equipe, args.algo, ondas, config.limites(), args.jobs,
                           args.emit_trace)

    pasta = garantir_pasta(args.out_dir)
    for nome, df in tabelas.items():
        salvar_csv(df, os.path.join(pasta, f"{nome}.csv"))
    salvar_yaml({
        "status": plano.status.value,
        "objective": float(plano.objective_value),
        "bound": None if plano.bound is None else float(plano.bound),
        "planned_parcels": plano.planned_parcels,
        "matches": plan_to_mapping(plano),
    }, os.path.join(pasta, "plano.yaml"))

    relatorio = formatar_tabela_kpis(tabelas["kpis"])
    salvar_texto(relatorio, os.path.join(pasta, "relatorio.txt"))
    if args.excel:
        salvar_excel({nome: df for nome, df in tabelas.items() if not nome.startswith("traco_")},
                     os.path.join(pasta, "resultados.xlsx"))
    print(relatorio)
    if len(ondas) > 1:
        print()
        print(resumo_kpis(tabelas).to_string(index=False))
    logger.info("Resultados gravados em %s", pasta)
    return 0


def resumo_kpis(tabelas):
    """Resumo das KPIs por algoritmo (soma de Rc, Rj e bloqueios, média de S_t)"""
    df = tabelas["kpis"]
    if df.empty:
        return pd.DataFrame(columns=["algo", "Rc", "Rj", "St_min", "blockages"])
    return df.groupby("algo", sort=False).agg(
        Rc=("Rc", "sum"), Rj=("Rj", "sum"), St_min=("St_min", "mean"), blockages=("blockages", "sum")
    ).reset_index()
