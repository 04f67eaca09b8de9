"""
Execução de onda do OPTSORT: alocação encomenda -> rampa.

O MILP de execução maximiza o número de encomendas alocadas respeitando a
admissibilidade derivada do plano (Q), o limite de encomendas por rampa na
onda e as restrições de janela que impedem o bloqueio das rampas: em qualquer
janela [r, r + C_j·t_j] chegam no máximo C̄_j encomendas alocadas à rampa j.
"""
import bisect
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from optsort_core import (
    ChuteKind, ConfigError, Layout, SolveStatus, SortPlan, Wave, WaveAllocation,
    parcel_admissibility,
)
from optsort_solver import MilpModel, Sense, SolveLimits, solve
from optsort_twin import Greedy, simulate_wave

logger = logging.getLogger(__name__)

WINDOW_MODES = ("events", "every")


@dataclass(frozen=True, eq=False)
class ExecutionProblem:
    """
    Instância do MILP de execução de uma onda

    As colunas seguem ``layout.sort_chutes``. ``arrivals`` é a tabela
    τ_mj = τ_m + τ̄_j em milissegundos.
    """
    wave: Wave
    layout: Layout
    Q: np.ndarray
    process_ms: Tuple[Optional[int], ...]
    caps: Tuple[int, ...]
    cap_bar: Tuple[int, ...]
    wave_caps: Tuple[Optional[int], ...]
    arrivals: np.ndarray
    window_mode: str = "events"

    @property
    def horizon_ms(self) -> int:
        return self.wave.horizon_ms

    def usable(self, j: int) -> bool:
        return self.process_ms[j] is not None and self.process_ms[j] > 0

    def window_span(self, j: int) -> int:
        return self.caps[j] * self.process_ms[j]

    def wave_capacity(self, j: int) -> int:
        """min(⌊T_w / t_j⌋, L_j)"""
        limite = self.horizon_ms // self.process_ms[j]
        if self.wave_caps[j] is not None:
            limite = min(limite, self.wave_caps[j])
        return limite


def arrival_table(wave: Wave, layout: Layout) -> np.ndarray:
    """Tabela τ_mj (N×k, ms); monotônica por coluna quando a onda está ordenada"""
    entradas = np.array([p.entry_ms for p in wave.parcels], dtype=np.int64)
    viagens = np.array([c.travel_ms for c in layout.sort_chutes], dtype=np.int64)
    return entradas[:, None] + viagens[None, :]


def build_execution_problem(wave: Wave, layout: Layout, plan: SortPlan,
                            cap_bar: Union[None, int, Sequence[int]] = None,
                            process_ms: Optional[Sequence[Optional[int]]] = None,
                            window_mode: str = "events") -> ExecutionProblem:
    """
    Monta o problema de execução
    :param cap_bar: C̄ escalar (aplicado às rampas espirais; diretas mantêm C_j),
                    vetor por rampa, ou None para C̄_j = C_j
    :param process_ms: Tempos efetivos por rampa (padrão: tempos nominais)
    :param window_mode: 'events' (janelas nas chegadas) ou 'every' (todo milissegundo)
    """
    rampas = layout.sort_chutes
    if window_mode not in WINDOW_MODES:
        raise ConfigError("window_mode", f"use um de {WINDOW_MODES}")
    caps = tuple(c.capacity for c in rampas)
    if cap_bar is None:
        efetivos = caps
    elif isinstance(cap_bar, (int, np.integer)):
        efetivos = tuple(int(cap_bar) if c.kind == ChuteKind.SPIRAL else c.capacity for c in rampas)
    else:
        efetivos = tuple(int(v) for v in cap_bar)
        if len(efetivos) != len(rampas):
            raise ConfigError("cap_bar", f"um C̄ por rampa de triagem ({len(rampas)})")
    if any(v < 1 for v in efetivos):
        raise ConfigError("cap_bar", "C̄_j ≥ 1")
    if process_ms is None:
        tempos = tuple(c.process_ms for c in rampas)
    else:
        tempos = tuple(process_ms)
        if len(tempos) != len(rampas):
            raise ConfigError("process_ms", f"um tempo por rampa de triagem ({len(rampas)})")
    return ExecutionProblem(
        wave=wave,
        layout=layout,
        Q=parcel_admissibility(wave, plan),
        process_ms=tempos,
        caps=caps,
        cap_bar=efetivos,
        wave_caps=tuple(c.wave_cap for c in rampas),
        arrivals=arrival_table(wave, layout) if wave.parcels else np.zeros((0, len(rampas)), dtype=np.int64),
        window_mode=window_mode,
    )


def wave_variables(problem: ExecutionProblem) -> List[Tuple[int, int]]:
    """Pares (m, j) com variável P̄_mj, na ordem dos ids das variáveis"""
    pares = []
    for m in range(problem.wave.size):
        for j in range(len(problem.process_ms)):
            if problem.Q[m, j] and problem.usable(j):
                pares.append((m, j))
    return pares


def window_rows(problem: ExecutionProblem, j: int, members: Sequence[int]) -> List[List[int]]:
    """
    Janelas da rampa j que precisam de restrição
    :param members: Índices m (em ordem de chegada) com variável na rampa j
    :return: Listas de m; só entram janelas com mais de C̄_j candidatas
    """
    if not members:
        return []
    chegadas = [int(problem.arrivals[m, j]) for m in members]
    largura = problem.window_span(j)
    limite = problem.cap_bar[j]
    linhas = []

    if problem.window_mode == "events":
        fim_anterior = -1
        fim = 0
        for ini in range(len(chegadas)):
            if ini > 0 and chegadas[ini] == chegadas[ini - 1]:
                continue
            fim = max(fim, ini)
            while fim + 1 < len(chegadas) and chegadas[fim + 1] <= chegadas[ini] + largura:
                fim += 1
            # Janela contida na anterior não acrescenta restrição
            if fim <= fim_anterior:
                continue
            fim_anterior = fim
            if fim - ini + 1 > limite:
                linhas.append(list(members[ini:fim + 1]))
        return linhas

    anterior = None
    for r in range(0, chegadas[-1] + 1):
        ini = bisect.bisect_left(chegadas, r)
        fim = bisect.bisect_right(chegadas, r + largura)
        if fim - ini <= limite or (ini, fim) == anterior:
            continue
        anterior = (ini, fim)
        linhas.append(list(members[ini:fim]))
    return linhas


def build_wave_model(problem: ExecutionProblem) -> MilpModel:
    """
    MILP de execução

    Variáveis binárias P̄_mj apenas onde Q_mj = 1 (ordem de ``wave_variables``).
    Restrições: limite por rampa na onda, no máximo uma rampa por encomenda
    (só para encomendas com duas ou mais opções) e as janelas anti-bloqueio.
    """
    pares = wave_variables(problem)
    m = MilpModel("execucao", Sense.MAX)
    ids: Dict[Tuple[int, int], int] = {}
    for (p, j) in pares:
        ids[(p, j)] = m.add_binary(f"P[{problem.wave.parcels[p].id},{problem.layout.sort_chutes[j].id}]")

    por_rampa: Dict[int, List[int]] = {}
    por_encomenda: Dict[int, List[int]] = {}
    for (p, j) in pares:
        por_rampa.setdefault(j, []).append(p)
        por_encomenda.setdefault(p, []).append(j)

    for j in sorted(por_rampa):
        m.add_constraint({ids[(p, j)]: 1 for p in por_rampa[j]}, "<=", problem.wave_capacity(j),
                         f"onda_c{j}")
    for p in sorted(por_encomenda):
        if len(por_encomenda[p]) >= 2:
            m.add_constraint({ids[(p, j)]: 1 for j in por_encomenda[p]}, "<=", 1, f"unica_m{p}")
    for j in sorted(por_rampa):
        for w, janela in enumerate(window_rows(problem, j, por_rampa[j])):
            m.add_constraint({ids[(p, j)]: 1 for p in janela}, "<=", problem.cap_bar[j], f"janela_c{j}_{w}")

    m.set_objective({v: 1 for v in ids.values()})
    return m


def heuristic_allocation(problem: ExecutionProblem) -> Dict[int, int]:
    """
    Alocação gulosa em ordem de chegada: cada encomenda vai para a rampa
    admissível mais próxima do OCR cuja janela e limite de onda ainda a aceitam
    :return: índice m -> coluna j
    """
    ordem = sorted((j for j in range(len(problem.process_ms)) if problem.usable(j)),
                   key=lambda j: (problem.layout.sort_chutes[j].travel_ms, j))
    recentes = {j: deque() for j in ordem}
    contagem = {j: 0 for j in ordem}
    alocacao = {}
    for m in range(problem.wave.size):
        for j in ordem:
            if not problem.Q[m, j] or contagem[j] >= problem.wave_capacity(j):
                continue
            chegada = int(problem.arrivals[m, j])
            janela = recentes[j]
            while janela and janela[0] < chegada - problem.window_span(j):
                janela.popleft()
            if len(janela) + 1 > problem.cap_bar[j]:
                continue
            janela.append(chegada)
            contagem[j] += 1
            alocacao[m] = j
            break
    return alocacao


def solve_wave(problem: ExecutionProblem, limits: Optional[SolveLimits] = None) -> WaveAllocation:
    """
    Resolve a alocação da onda

    Se a heurística aloca todas as encomendas que têm alguma rampa admissível,
    o resultado já é ótimo e o MILP não é resolvido.
    """
    pares = wave_variables(problem)
    alocaveis = len({p for p, _ in pares})
    heuristica = heuristic_allocation(problem)
    ids_encomendas = tuple(p.id for p in problem.wave.parcels)
    rampas = problem.layout.sort_chutes

    if len(heuristica) == alocaveis:
        logger.info("Onda alocada pela heurística: %d de %d encomendas (ótimo)", alocaveis, problem.wave.size)
        atribuicao = {problem.wave.parcels[m].id: rampas[j].id for m, j in sorted(heuristica.items())}
        return WaveAllocation(atribuicao, problem.cap_bar, ids_encomendas, SolveStatus.OPTIMAL,
                              objective=alocaveis, bound=float(alocaveis))

    modelo = build_wave_model(problem)
    inicial = np.array([1.0 if heuristica.get(p) == j else 0.0 for p, j in pares])
    solucao = solve(modelo, limits, warm_start=inicial)
    if not solucao.has_incumbent:
        # Nenhuma alocação é sempre viável
        logger.warning("Limite do solver sem incumbente: onda fica toda como rejeição planejada")
        return WaveAllocation({}, problem.cap_bar, ids_encomendas, solucao.status,
                              objective=0, bound=solucao.bound)
    atribuicao = {}
    for (p, j), v in zip(pares, solucao.values):
        if v > 0.5:
            atribuicao[problem.wave.parcels[p].id] = rampas[j].id
    atribuicao = dict(sorted(atribuicao.items()))
    logger.info("Onda alocada: %d de %d encomendas, status=%s",
                len(atribuicao), problem.wave.size, solucao.status.value)
    return WaveAllocation(atribuicao, problem.cap_bar, ids_encomendas, solucao.status,
                          objective=len(atribuicao), bound=solucao.bound)


def greedy_allocate(problem: ExecutionProblem, layout: Optional[Layout] = None,
                    cage_capacity: int = 40) -> pd.DataFrame:
    """
    Decisões online do GREEDY: a encomenda entra na primeira rampa admissível
    com espaço, na ordem do anel; após R voltas sem sucesso vai para a rejeição
    :return: Tabela por encomenda (parcel, chute, laps, outcome)
    """
    layout = layout or problem.layout
    resultado = simulate_wave(problem.wave, layout, problem.Q, problem.process_ms, Greedy(), cage_capacity)
    return resultado.parcels[["parcel", "chute", "laps", "outcome"]]


def audit_allocation(allocation: WaveAllocation, problem: ExecutionProblem) -> List[str]:
    """Verificador independente das restrições de execução sobre a alocação"""
    violacoes = []
    rampas = problem.layout.sort_chutes
    coluna = {c.id: j for j, c in enumerate(rampas)}
    indice = {p.id: m for m, p in enumerate(problem.wave.parcels)}
    por_rampa: Dict[int, List[int]] = {}
    for pid, cid in allocation.assignment.items():
        if pid not in indice:
            violacoes.append(f"encomenda {pid} fora da onda")
            continue
        if cid not in coluna:
            violacoes.append(f"encomenda {pid}: rampa {cid} inexistente")
            continue
        m, j = indice[pid], coluna[cid]
        if not problem.Q[m, j]:
            violacoes.append(f"encomenda {pid}: rampa {cid} não admissível")
        if not problem.usable(j):
            violacoes.append(f"encomenda {pid}: rampa {cid} sem equipe")
            continue
        por_rampa.setdefault(j, []).append(int(problem.arrivals[m, j]))
    for j, chegadas in por_rampa.items():
        if len(chegadas) > problem.wave_capacity(j):
            violacoes.append(f"rampa {rampas[j].id}: {len(chegadas)} encomendas > {problem.wave_capacity(j)}")
        chegadas.sort()
        largura = problem.window_span(j)
        for ini, r in enumerate(chegadas):
            fim = bisect.bisect_right(chegadas, r + largura)
            if fim - ini > allocation.effective_caps[j]:
                violacoes.append(f"rampa {rampas[j].id}: {fim - ini} chegadas em [{r}, {r + largura}] ms")
                break
    return violacoes


def allocation_to_df(allocation: WaveAllocation) -> pd.DataFrame:
    """Linhas (parcel, chute) ordenadas por encomenda; rejeições planejadas como REJECT"""
    linhas = [{"parcel": pid, "chute": allocation.assignment.get(pid, "REJECT")}
              for pid in sorted(allocation.parcel_ids)]
    return pd.DataFrame(linhas, columns=["parcel", "chute"])
