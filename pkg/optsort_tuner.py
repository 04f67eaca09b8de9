"""
Ajuste em malha fechada da capacidade efetiva C̄ das rampas.

Cada iteração resolve o MILP de execução com o C̄ atual, simula a alocação no
gêmeo digital e ajusta C̄: sobe enquanto houver rejeições sem bloqueio, volta
ao último valor seguro no primeiro bloqueio e para quando as rejeições zeram.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd

from optsort_core import (
    ChuteKind, InfeasibleError, KpiReport, Scenario, SortPlan, WaveAllocation,
)
from optsort_executor import build_execution_problem, solve_wave
from optsort_labor import StaffingPlan, nominal_process_times
from optsort_solver import SolveLimits
from optsort_twin import OptsortAllocation, SimResult, compute_kpis, run_simulation, sample_efficiencies

logger = logging.getLogger(__name__)

# Folga máxima de C̄ acima de C_j
OVERDRIVE = 20


class StopReason(str, Enum):
    ZERO_REJECTIONS = "ZeroRejections"
    BLOCKAGE_BOUNDARY = "BlockageBoundary"
    MAX_ITERS = "MaxIters"


@dataclass(frozen=True)
class TuningIteration:
    iteration: int
    cap_bar: Tuple[int, ...]
    kpis: KpiReport


@dataclass(frozen=True)
class TuningTrace:
    iterations: Tuple[TuningIteration, ...]
    stop_reason: StopReason
    final_cap_bar: Tuple[int, ...]
    certificate: KpiReport


def _pior(relatorios: Sequence[KpiReport]) -> KpiReport:
    """Relatório de pior caso: máximos de Rc, Rj, S_t e bloqueios; mínimos de vazão e processadas"""
    return KpiReport(
        rc=max(r.rc for r in relatorios),
        rj=max(r.rj for r in relatorios),
        st_min=max(r.st_min for r in relatorios),
        throughput_pph=min(r.throughput_pph for r in relatorios),
        blockages=max(r.blockages for r in relatorios),
        processed=min(r.processed for r in relatorios),
        in_system=max(r.in_system for r in relatorios),
        wave_size=relatorios[0].wave_size,
        laps=max(r.laps for r in relatorios),
    )


def _vetor_inicial(scenario: Scenario, initial: Union[None, int, Sequence[int]]) -> List[int]:
    rampas = scenario.layout.sort_chutes
    if initial is None:
        return [c.capacity for c in rampas]
    if isinstance(initial, (int, np.integer)):
        return [int(initial) if c.kind == ChuteKind.SPIRAL else c.capacity for c in rampas]
    return [int(v) for v in initial]


def cap_bar_label(cap_bar: Sequence[int], scenario: Scenario) -> Union[int, str]:
    """C̄ escalar quando todas as espirais têm o mesmo valor; senão a lista separada por ';'"""
    espirais = {v for v, c in zip(cap_bar, scenario.layout.sort_chutes) if c.kind == ChuteKind.SPIRAL}
    if len(espirais) == 1:
        return espirais.pop()
    return ";".join(str(v) for v in cap_bar)


def tune_capacity(scenario: Scenario, plan: SortPlan, staffing: StaffingPlan,
                  initial: Union[None, int, Sequence[int]] = None, step: int = 5, max_iters: int = 10,
                  wave_index: int = 0, seeds: Optional[Sequence[int]] = None, per_chute: bool = False,
                  limits: Optional[SolveLimits] = None) -> TuningTrace:
    """
    Ajusta C̄ até zerar as rejeições sem provocar bloqueios
    :param initial: C̄ inicial (padrão C_j); inteiro vale para as rampas espirais
    :param step: Incremento por iteração
    :param seeds: Sementes de eficiência; a decisão usa a pior semente
    :param per_chute: Sobe apenas as rampas ligadas às rejeições e congela as que bloquearam
    """
    if step < 1:
        raise ValueError("step ≥ 1")
    layout = scenario.layout
    rampas = layout.sort_chutes
    sementes = list(seeds) if seeds else [scenario.seed]
    onda = scenario.waves[wave_index]
    tempos = nominal_process_times(layout, staffing, scenario.workers)
    teto = [c.capacity + OVERDRIVE for c in rampas]

    cap_bar = _vetor_inicial(scenario, initial)
    seguro: Optional[Tuple[Tuple[int, ...], KpiReport]] = None
    congeladas: Set[int] = set()
    iteracoes: List[TuningIteration] = []
    motivo = StopReason.MAX_ITERS
    final: Optional[Tuple[Tuple[int, ...], KpiReport]] = None

    for it in range(1, max_iters + 1):
        atual = tuple(cap_bar)
        try:
            problema = build_execution_problem(onda, layout, plan, atual, tempos)
            alocacao = solve_wave(problema, limits)
        except InfeasibleError as e:
            raise InfeasibleError(str(e), e.precondition, e.hint, iteration=it) from e
        politica = OptsortAllocation(alocacao, scenario.planned_rejection)
        resultados = [run_simulation(scenario, plan, staffing, politica, seed=s, wave_index=wave_index)
                      for s in sementes]
        relatorios = [compute_kpis(r) for r in resultados]
        kpis = _pior(relatorios)
        iteracoes.append(TuningIteration(it, atual, kpis))
        logger.info("Ajuste %d: C̄=%s Rc=%d Rj=%d bloqueios=%d",
                    it, cap_bar_label(atual, scenario), kpis.rc, kpis.rj, kpis.blockages)

        if kpis.blockages > 0:
            if seguro is None:
                logger.warning("Bloqueio já no C̄ inicial: nenhum valor seguro foi encontrado")
                motivo, final = StopReason.BLOCKAGE_BOUNDARY, (atual, kpis)
                break
            if per_chute:
                bloqueadas = set()
                for r in resultados:
                    bloqueadas.update(layout.column_of(int(c)) for c in r.blockages["chute"])
                novas = bloqueadas - congeladas
                if novas:
                    for j in novas:
                        cap_bar[j] = seguro[0][j]
                    congeladas |= novas
                    continue
            motivo, final = StopReason.BLOCKAGE_BOUNDARY, seguro
            break

        seguro = (atual, kpis)
        if kpis.rj == 0:
            motivo, final = StopReason.ZERO_REJECTIONS, seguro
            break

        if per_chute:
            candidatas = _rampas_das_rejeicoes(resultados, plan, scenario) - congeladas
            if not candidatas and congeladas:
                # Todas as rampas ligadas às rejeições já bloquearam
                motivo, final = StopReason.BLOCKAGE_BOUNDARY, seguro
                break
        else:
            candidatas = {j for j, c in enumerate(rampas) if c.kind == ChuteKind.SPIRAL}
        mudou = False
        for j in sorted(candidatas):
            novo = min(cap_bar[j] + step, teto[j])
            if novo != cap_bar[j]:
                cap_bar[j] = novo
                mudou = True
        if not mudou:
            logger.info("C̄ chegou ao teto C_j + %d sem zerar as rejeições", OVERDRIVE)
            break

    if final is None:
        final = seguro if seguro is not None else (iteracoes[-1].cap_bar, iteracoes[-1].kpis)
    return TuningTrace(tuple(iteracoes), motivo, final[0], final[1])


def _rampas_das_rejeicoes(resultados: Sequence[SimResult], plan: SortPlan, scenario: Scenario) -> Set[int]:
    """Colunas casadas com os destinos das encomendas rejeitadas"""
    colunas: Set[int] = set()
    for r in resultados:
        rejeitadas = r.parcels[r.parcels["outcome"] == "rejected"]
        for destino in rejeitadas["destination"].unique():
            colunas.update(int(j) for j in np.flatnonzero(plan.X[int(destino) - 1]))
    espirais = {j for j, c in enumerate(scenario.layout.sort_chutes) if c.kind == ChuteKind.SPIRAL}
    return colunas & espirais


def _simular_semente(args) -> KpiReport:
    scenario, plan, staffing, alocacao, semente, faixa, wave_index = args
    eficiencias = [w.efficiency for w in sample_efficiencies(scenario.workers, faixa, semente)]
    politica = OptsortAllocation(alocacao, scenario.planned_rejection)
    resultado = run_simulation(scenario, plan, staffing, politica, wave_index=wave_index,
                               efficiencies=eficiencias)
    return compute_kpis(resultado)


def robustness_sweep(scenario: Scenario, plan: SortPlan, staffing: StaffingPlan,
                     cap_bar: Union[None, int, Sequence[int]] = None,
                     efficiency_range: Optional[Sequence[float]] = None, n_seeds: int = 20,
                     wave_index: int = 0, jobs: int = 1, limits: Optional[SolveLimits] = None,
                     base_seed: Optional[int] = None) -> Tuple[KpiReport, pd.DataFrame]:
    """
    Resolve a onda uma vez com eficiência nominal e simula com eficiências sorteadas por semente
    :param efficiency_range: Faixa de eficiência (padrão: a do cenário)
    :param n_seeds: Número de sementes (base_seed, base_seed + 1, ...)
    :param jobs: Processos paralelos para as simulações
    :return: (relatório de pior caso, tabela por semente)
    """
    if n_seeds < 1:
        raise ValueError("n_seeds ≥ 1")
    faixa = tuple(efficiency_range) if efficiency_range is not None else scenario.efficiency_range
    base = scenario.seed if base_seed is None else base_seed
    layout = scenario.layout
    tempos = nominal_process_times(layout, staffing, scenario.workers)
    vetor = None if cap_bar is None else _vetor_inicial(scenario, cap_bar)
    problema = build_execution_problem(scenario.waves[wave_index], layout, plan, vetor, tempos)
    alocacao: WaveAllocation = solve_wave(problema, limits)

    sementes = [base + i for i in range(n_seeds)]
    tarefas = [(scenario, plan, staffing, alocacao, s, faixa, wave_index) for s in sementes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            relatorios = list(pool.map(_simular_semente, tarefas))
    else:
        relatorios = [_simular_semente(t) for t in tarefas]

    tabela = pd.DataFrame([{
        "seed": s,
        "Rc": r.rc,
        "Rj": r.rj,
        "St_min": round(r.st_min, 4),
        "pph": round(r.throughput_pph, 1),
        "blockages": r.blockages,
    } for s, r in zip(sementes, relatorios)], columns=["seed", "Rc", "Rj", "St_min", "pph", "blockages"])
    pior = _pior(relatorios)
    logger.info("Varredura de robustez (%d sementes, faixa %s): pior Rc=%d Rj=%d bloqueios=%d",
                n_seeds, faixa, pior.rc, pior.rj, pior.blockages)
    return pior, tabela


def trace_to_df(trace: TuningTrace, scenario: Scenario) -> pd.DataFrame:
    """Tabela iter,cap_bar,Rc,Rj,blockages,St_min"""
    return pd.DataFrame([{
        "iter": it.iteration,
        "cap_bar": cap_bar_label(it.cap_bar, scenario),
        "Rc": it.kpis.rc,
        "Rj": it.kpis.rj,
        "blockages": it.kpis.blockages,
        "St_min": round(it.kpis.st_min, 4),
    } for it in trace.iterations], columns=["iter", "cap_bar", "Rc", "Rj", "blockages", "St_min"])
